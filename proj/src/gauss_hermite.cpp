#include "ivsign/gauss_hermite.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>

namespace ivsign {

namespace {

constexpr double kSqrtPi = 1.77245385090551602730;

GaussHermiteRule build_rule(int n) {
  // Jacobi matrix of the (physicists') Hermite polynomials: zero diagonal,
  // off-diagonal b_i = sqrt(i/2).
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    const double b = std::sqrt(0.5 * i);
    j(i, i - 1) = b;
    j(i - 1, i) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("gauss_hermite: eigensolver failed");
  }
  GaussHermiteRule rule;
  rule.nodes = es.eigenvalues();  // ascending
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    const double v0 = es.eigenvectors()(0, i);
    rule.weights[i] = kSqrtPi * v0 * v0;
  }
  return rule;
}

}  // namespace

const GaussHermiteRule& gauss_hermite(int n) {
  if (n < 1) {
    throw std::invalid_argument("gauss_hermite: n must be positive");
  }
  static std::mutex mu;
  static std::map<int, std::unique_ptr<GaussHermiteRule>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) {
    it = cache.emplace(n, std::make_unique<GaussHermiteRule>(build_rule(n))).first;
  }
  return *it->second;
}

}  // namespace ivsign
