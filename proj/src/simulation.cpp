#include "ivsign/simulation.hpp"

#include <algorithm>
#include <cmath>

#include "ivsign/anderson_rubin.hpp"
#include "ivsign/estimators.hpp"
#include "ivsign/gauss_hermite.hpp"
#include "ivsign/rng.hpp"

namespace ivsign {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Left guard for the unbiased integrand: the Mills ratio exceeds DBL_MAX
// below roughly -37.66. The dropped tail mass is below 1e-9 for any pi > 0.
constexpr double kMillsSafeXi2 = -37.5;

void require_k1(const Scenario& scenario, const char* what) {
  if (scenario.k() != 1) {
    throw std::invalid_argument(std::string(what) + ": supported for k = 1 only");
  }
  if (scenario.sigma.rows() != 2 || scenario.sigma.cols() != 2) {
    throw std::invalid_argument(std::string(what) + ": sigma must be 2 x 2");
  }
}

}  // namespace

GridSpec1 GridSpec1::defaults() {
  GridSpec1 grid;
  grid.sigma12_values = {0.0, 0.3, 0.5, 0.7, 0.95};
  grid.pi_values = {0.25, 0.5, 1.0, 2.0, 4.0, 8.0};
  return grid;
}

Reduced1 reduce_single(const SingleTheta& theta) {
  if (!(theta.sigma1_sq > 0.0) || !(theta.sigma2_sq > 0.0)) {
    throw std::invalid_argument("reduce_single: variances must be positive");
  }
  const double s1 = std::sqrt(theta.sigma1_sq);
  const double s2 = std::sqrt(theta.sigma2_sq);
  if (!(std::fabs(theta.sigma12) < s1 * s2)) {
    throw std::invalid_argument("reduce_single: |sigma12| must be below sigma1*sigma2");
  }
  // Var(xi1 - beta*xi2) > 0 under positive definiteness.
  const double q = theta.sigma1_sq - 2.0 * theta.beta * theta.sigma12 +
                   theta.beta * theta.beta * theta.sigma2_sq;
  const double resid_cov = theta.sigma12 - theta.beta * theta.sigma2_sq;
  const double sign = resid_cov < 0.0 ? -1.0 : 1.0;
  const double a1 = sign / std::sqrt(q);
  const double a2 = -theta.beta * a1;
  const double a3 = 1.0 / s2;

  Reduced1 out;
  out.a << a1, a2, 0.0, a3;
  out.pi_canonical = a3 * theta.pi;
  out.sigma12_canonical = a1 * a3 * resid_cov;
  return out;
}

double bias_quadrature(EstimatorKind estimator, double pi, double sigma12, int nodes) {
  if (nodes < 50) {
    throw std::invalid_argument("bias_quadrature: need at least 50 nodes");
  }
  if (!(pi >= 0.0) || !(std::fabs(sigma12) < 1.0)) {
    throw std::invalid_argument("bias_quadrature: need pi >= 0 and |sigma12| < 1");
  }
  if (estimator == EstimatorKind::Unbiased && pi < 0.16) {
    throw std::invalid_argument(
        "bias_quadrature: unbiased-estimator bias is only computed for pi >= 0.16; below that "
        "the heavy tails of the estimator put the integral outside quadrature reach");
  }
  if (estimator == EstimatorKind::TwoSls) {
    throw std::invalid_argument("bias_quadrature: the 2SLS estimator has no mean at k = 1");
  }
  const GaussHermiteRule& rule = gauss_hermite(nodes);
  const double rho = sigma12;
  const double rho_c = std::sqrt(1.0 - rho * rho);
  const double sqrt2 = std::sqrt(2.0);

  // Coordinates ordered so xi2 depends on the outer node only:
  //   xi2 = pi + sqrt(2) x_i,  xi1 = sqrt(2) (rho x_i + rho_c x_j).
  double total = 0.0;
  for (int i = 0; i < nodes; ++i) {
    const double wi = rule.weights[i];
    if (wi == 0.0) continue;
    const double xi2 = pi + sqrt2 * rule.nodes[i];
    if (estimator == EstimatorKind::Unbiased && xi2 < kMillsSafeXi2) continue;
    double row = 0.0;
    for (int j = 0; j < nodes; ++j) {
      const double wj = rule.weights[j];
      if (wj == 0.0) continue;
      const double xi1 = sqrt2 * (rho * rule.nodes[i] + rho_c * rule.nodes[j]);
      const double est = estimator == EstimatorKind::Unbiased
                             ? beta_u_scalar(xi1, xi2, rho, 1.0)
                             : (xi2 * xi1 + rho) / (xi2 * xi2 + 1.0);
      row += wj * est;
    }
    total += wi * row;
  }
  return total / kPi;  // beta = 0 at the canonical design
}

std::vector<double> simulate_estimates(EstimatorKind estimator, const Scenario& scenario) {
  require_k1(scenario, "simulate_estimates");
  const double mu1 = scenario.pi[0] * scenario.beta;
  const double mu2 = scenario.pi[0];
  Eigen::LLT<Eigen::Matrix2d> llt(scenario.sigma);
  if (llt.info() != Eigen::Success) {
    throw ConditioningError("simulate_estimates: sigma factorization failed");
  }
  const Eigen::Matrix2d l = llt.matrixL();
  const double s12 = scenario.sigma(0, 1);
  const double s2sq = scenario.sigma(1, 1);

  std::vector<double> out(static_cast<std::size_t>(scenario.n_draws));
  const std::int64_t n_chunks = n_chunks_for(scenario.n_draws);
  for_each_chunk(n_chunks, [&](std::int64_t chunk) {
    RandomStream rng(substream_seed(scenario.seed, static_cast<std::uint64_t>(chunk)));
    const std::int64_t lo = chunk * kMcChunk;
    const std::int64_t hi = std::min(lo + kMcChunk, scenario.n_draws);
    for (std::int64_t s = lo; s < hi; ++s) {
      const double n1 = rng.normal();
      const double n2 = rng.normal();
      const double xi1 = mu1 + l(0, 0) * n1;
      const double xi2 = mu2 + l(1, 0) * n1 + l(1, 1) * n2;
      double est = 0.0;
      switch (estimator) {
        case EstimatorKind::Unbiased:
          est = beta_u_scalar(xi1, xi2, s12, s2sq);
          break;
        case EstimatorKind::TwoSls:
          est = xi1 / xi2;  // xi2 == 0 has probability zero
          break;
        case EstimatorKind::Fuller:
          est = (xi2 * xi1 + s12) / (xi2 * xi2 + s2sq);
          break;
      }
      out[static_cast<std::size_t>(s)] = est;
    }
  });
  return out;
}

double nearest_rank_quantile(std::vector<double> sample, double prob) {
  if (sample.empty()) {
    throw std::invalid_argument("nearest_rank_quantile: empty sample");
  }
  if (!(prob > 0.0 && prob <= 1.0)) {
    throw std::invalid_argument("nearest_rank_quantile: prob must lie in (0, 1]");
  }
  std::sort(sample.begin(), sample.end());
  const auto n = static_cast<double>(sample.size());
  const auto rank = static_cast<std::size_t>(std::ceil(prob * n));
  return sample[std::max<std::size_t>(rank, 1) - 1];
}

std::vector<double> deviation_quantiles(EstimatorKind estimator, const Scenario& scenario,
                                        const std::vector<double>& probs) {
  for (double p : probs) {
    if (!(p > 0.0 && p < 1.0)) {
      throw std::invalid_argument("deviation_quantiles: probs must lie in (0, 1)");
    }
  }
  std::vector<double> dev = simulate_estimates(estimator, scenario);
  for (double& d : dev) d = std::fabs(d - scenario.beta);
  std::sort(dev.begin(), dev.end());
  std::vector<double> out;
  out.reserve(probs.size());
  const auto n = static_cast<double>(dev.size());
  for (double p : probs) {
    const auto rank = static_cast<std::size_t>(std::ceil(p * n));
    out.push_back(dev[std::max<std::size_t>(rank, 1) - 1]);
  }
  return out;
}

double ks_dominance(const std::vector<double>& dev_a, const std::vector<double>& dev_b) {
  if (dev_a.empty() || dev_b.empty()) {
    throw std::invalid_argument("ks_dominance: empty sample");
  }
  std::vector<double> a(dev_a), b(dev_b);
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  // Under the hypothesis that a dominates b, F_a <= F_b everywhere; the
  // statistic is the largest positive violation over the pooled support.
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t ia = 0, ib = 0;
  double stat = 0.0;
  while (ia < a.size() || ib < b.size()) {
    double x;
    if (ib >= b.size() || (ia < a.size() && a[ia] <= b[ib])) {
      x = a[ia];
    } else {
      x = b[ib];
    }
    while (ia < a.size() && a[ia] <= x) ++ia;
    while (ib < b.size() && b[ib] <= x) ++ib;
    stat = std::max(stat, static_cast<double>(ia) / na - static_cast<double>(ib) / nb);
  }
  return stat;
}

double median_bias(EstimatorKind estimator, const Scenario& scenario) {
  std::vector<double> est = simulate_estimates(estimator, scenario);
  return nearest_rank_quantile(std::move(est), 0.5) - scenario.beta;
}

Scenario build_multi_design(const Eigen::VectorXd& pi_direction, const Eigen::MatrixXd& z_gram,
                            double pi_norm, double sigma_uv) {
  const Eigen::Index k = pi_direction.size();
  if (k < 1 || (pi_direction.array() <= 0.0).any()) {
    throw std::invalid_argument("build_multi_design: direction entries must be positive");
  }
  if (!(pi_norm > 0.0)) {
    throw std::invalid_argument("build_multi_design: pi_norm must be positive");
  }
  if (!(std::fabs(sigma_uv) < 1.0)) {
    throw std::invalid_argument("build_multi_design: |sigma_uv| must be below 1");
  }
  require_spd(z_gram, "build_multi_design.z_gram");

  Eigen::LLT<Eigen::MatrixXd> llt(z_gram);
  const Eigen::MatrixXd qz = llt.solve(Eigen::MatrixXd::Identity(k, k));  // (Z'Z)^-1

  Scenario scenario;
  scenario.pi = pi_norm / pi_direction.norm() * pi_direction;
  scenario.beta = 0.0;
  scenario.sigma.resize(2 * k, 2 * k);
  scenario.sigma.topLeftCorner(k, k) = qz;
  scenario.sigma.topRightCorner(k, k) = sigma_uv * qz;
  scenario.sigma.bottomLeftCorner(k, k) = sigma_uv * qz;
  scenario.sigma.bottomRightCorner(k, k) = qz;
  scenario.sigma = 0.5 * (scenario.sigma + scenario.sigma.transpose()).eval();
  return scenario;
}

double ar_containment(const Scenario& scenario, double level) {
  require_k1(scenario, "ar_containment");
  if (!(level > 0.0 && level < 1.0)) {
    throw std::invalid_argument("ar_containment: level must lie in (0, 1)");
  }
  const double q = chi_squared_1_quantile(level);
  const double mu1 = scenario.pi[0] * scenario.beta;
  const double mu2 = scenario.pi[0];
  Eigen::LLT<Eigen::Matrix2d> llt(scenario.sigma);
  if (llt.info() != Eigen::Success) {
    throw ConditioningError("ar_containment: sigma factorization failed");
  }
  const Eigen::Matrix2d l = llt.matrixL();
  const double s1sq = scenario.sigma(0, 0);
  const double s12 = scenario.sigma(0, 1);
  const double s2sq = scenario.sigma(1, 1);

  const std::int64_t n_chunks = n_chunks_for(scenario.n_draws);
  std::vector<std::int64_t> hits(n_chunks, 0);
  for_each_chunk(n_chunks, [&](std::int64_t chunk) {
    RandomStream rng(substream_seed(scenario.seed, static_cast<std::uint64_t>(chunk)));
    const std::int64_t lo = chunk * kMcChunk;
    const std::int64_t hi = std::min(lo + kMcChunk, scenario.n_draws);
    std::int64_t count = 0;
    for (std::int64_t s = lo; s < hi; ++s) {
      const double n1 = rng.normal();
      const double n2 = rng.normal();
      const double xi1 = mu1 + l(0, 0) * n1;
      const double xi2 = mu2 + l(1, 0) * n1 + l(1, 1) * n2;
      const double bu = beta_u_scalar(xi1, xi2, s12, s2sq);
      // Membership check straight from the statistic; no set inversion needed.
      const double num = xi1 - bu * xi2;
      const double den = s1sq - 2.0 * bu * s12 + bu * bu * s2sq;
      if (num * num <= q * den) ++count;
    }
    hits[chunk] = count;
  });
  std::int64_t total = 0;
  for (std::int64_t h : hits) total += h;
  return static_cast<double>(total) / static_cast<double>(scenario.n_draws);
}

double expected_first_stage_f(const Scenario& scenario) {
  const Eigen::Index k = scenario.k();
  const Eigen::MatrixXd s22 = scenario.sigma.bottomRightCorner(k, k);
  Eigen::LLT<Eigen::MatrixXd> llt(s22);
  if (llt.info() != Eigen::Success) {
    throw ConditioningError("expected_first_stage_f: Sigma22 factorization failed");
  }
  return 1.0 + scenario.pi.dot(llt.solve(scenario.pi)) / static_cast<double>(k);
}

}  // namespace ivsign
