#include "ivsign/risk_bounds.hpp"

#include <cmath>
#include <vector>

#include "ivsign/estimators.hpp"
#include "ivsign/rng.hpp"

namespace ivsign {

namespace {

// Projection matrix P with xi_star = P xi, plus the 2x2 submodel covariance.
struct Projection {
  Eigen::Matrix2d sigma_star;
  Eigen::MatrixXd p;  // 2 x 2k
};

Projection make_projection(const Eigen::MatrixXd& sigma, const Eigen::VectorXd& pi_star) {
  const Eigen::Index k = pi_star.size();
  if (pi_star.isZero(0.0)) {
    throw std::invalid_argument("submodel_stats: pi_star must be nonzero");
  }
  if (sigma.rows() != 2 * k) {
    throw std::invalid_argument("submodel_stats: dimension mismatch");
  }
  Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(2 * k, 2);  // I2 (x) pi*
  basis.col(0).head(k) = pi_star;
  basis.col(1).tail(k) = pi_star;

  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) {
    throw ConditioningError("submodel_stats: Sigma factorization failed");
  }
  const Eigen::MatrixXd sinv_basis = llt.solve(basis);       // S^-1 (I2 (x) pi*)
  const Eigen::Matrix2d gram = basis.transpose() * sinv_basis;
  const Eigen::Matrix2d gram_inv = gram.inverse();

  Projection proj;
  proj.sigma_star = 0.5 * (gram_inv + gram_inv.transpose());
  proj.p = proj.sigma_star * sinv_basis.transpose();
  return proj;
}

}  // namespace

SubmodelStats submodel_stats(const ReducedFormStats& stats, const Eigen::VectorXd& pi_star) {
  if (pi_star.size() != stats.k()) {
    throw std::invalid_argument("submodel_stats: pi_star must have length k");
  }
  const Projection proj = make_projection(stats.sigma, pi_star);
  SubmodelStats out;
  out.xi_star = proj.p * stats.stacked();
  out.sigma_star = proj.sigma_star;
  return out;
}

double oracle_beta(const ReducedFormStats& stats, const Eigen::VectorXd& pi_star) {
  const SubmodelStats sub = submodel_stats(stats, pi_star);
  return beta_u(InstrumentBlock(sub.xi_star, sub.sigma_star));
}

McValue mad_lower_bound(const Eigen::VectorXd& pi, double beta, const Eigen::MatrixXd& sigma,
                        std::int64_t n_draws, std::uint64_t seed) {
  if (n_draws < 1000) {
    throw std::invalid_argument("mad_lower_bound: n_draws must be >= 1000");
  }
  const Eigen::Index k = pi.size();
  require_spd(sigma, "mad_lower_bound.sigma");
  const Projection proj = make_projection(sigma, pi);
  const double s12 = proj.sigma_star(0, 1);
  const double s2sq = proj.sigma_star(1, 1);

  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  const Eigen::MatrixXd l = llt.matrixL();
  Eigen::VectorXd mean(2 * k);
  mean.head(k) = beta * pi;
  mean.tail(k) = pi;
  const Eigen::Vector2d mean_star = proj.p * mean;
  const Eigen::MatrixXd pl = proj.p * l;  // 2 x 2k: xi_star = mean_star + pl * n

  const std::int64_t n_chunks = n_chunks_for(n_draws);
  std::vector<double> sums(n_chunks, 0.0), sumsqs(n_chunks, 0.0);
  std::vector<std::int64_t> counts(n_chunks, 0);

  for_each_chunk(n_chunks, [&](std::int64_t chunk) {
    RandomStream rng(substream_seed(seed, static_cast<std::uint64_t>(chunk)));
    const std::int64_t lo = chunk * kMcChunk;
    const std::int64_t hi = std::min(lo + kMcChunk, n_draws);
    Eigen::VectorXd n2k(2 * k);
    double sum = 0.0, sumsq = 0.0;
    for (std::int64_t s = lo; s < hi; ++s) {
      rng.normals(n2k);
      const Eigen::Vector2d xs = mean_star + pl * n2k;
      const double dev = std::fabs(beta_u_scalar(xs[0], xs[1], s12, s2sq) - beta);
      sum += dev;
      sumsq += dev * dev;
    }
    sums[chunk] = sum;
    sumsqs[chunk] = sumsq;
    counts[chunk] = hi - lo;
  });

  double sum = 0.0, sumsq = 0.0;
  std::int64_t n = 0;
  for (std::int64_t c = 0; c < n_chunks; ++c) {
    sum += sums[c];
    sumsq += sumsqs[c];
    n += counts[c];
  }
  McValue out;
  out.value = sum / static_cast<double>(n);
  const double var =
      std::max(0.0, (sumsq - static_cast<double>(n) * out.value * out.value) /
                        static_cast<double>(n - 1));
  out.std_error = std::sqrt(var / static_cast<double>(n));
  out.draws = n;
  return out;
}

}  // namespace ivsign
