#ifndef IVSIGN_SIMULATION_HPP
#define IVSIGN_SIMULATION_HPP

#include <cstdint>
#include <vector>

#include "ivsign/reduced_form.hpp"

namespace ivsign {

/// Single-instrument estimators compared by the simulation studies.
enum class EstimatorKind { Unbiased, TwoSls, Fuller };

/// One simulation design point after equivariance reduction (beta = 0 and
/// unit structural variances unless deliberately overridden).
struct Scenario {
  Eigen::VectorXd pi;
  double beta = 0.0;
  Eigen::MatrixXd sigma;  // 2k x 2k
  std::int64_t n_draws = 100000;
  std::uint64_t seed = 0;

  Eigen::Index k() const { return pi.size(); }
};

/// Grid over the reduced two-parameter space of the k = 1 model.
struct GridSpec1 {
  std::vector<double> sigma12_values;  // in [0, 1)
  std::vector<double> pi_values;       // positive

  static GridSpec1 defaults();
};

/// Sign-calibrated multi-instrument design: Sigma is assembled as
/// [[1, s_uv], [s_uv, 1]] (x) z_gram^-1 and the first-stage mean points
/// along pi_direction with norm pi_norm.
struct MultiDesign {
  Eigen::VectorXd pi_direction;  // positive entries
  Eigen::MatrixXd z_gram;        // Z'Z
  std::vector<double> pi_norm_values;
  std::vector<double> sigma_uv_values;  // in (-1, 1)
};

/// Parameters of the k = 1 model before equivariance reduction.
struct SingleTheta {
  double beta = 0.0;
  double pi = 1.0;
  double sigma1_sq = 1.0;
  double sigma12 = 0.0;
  double sigma2_sq = 1.0;
};

/// The triangular transform A realizing the reduction, with the canonical
/// parameters it produces (beta = 0, unit variances, sigma12 in [0, 1)).
struct Reduced1 {
  double pi_canonical = 0.0;
  double sigma12_canonical = 0.0;
  Eigen::Matrix2d a;
};

Reduced1 reduce_single(const SingleTheta& theta);

/// Bias E[estimate - beta] at the canonical design (beta = 0, unit
/// variances) by tensor-product Gauss-Hermite quadrature. Deterministic.
/// The unbiased estimator requires pi >= 0.16; below that its heavy tails
/// put the expectation outside quadrature reach.
double bias_quadrature(EstimatorKind estimator, double pi, double sigma12, int nodes);

/// Draws of the estimator at a k = 1 scenario, in draw order (deterministic
/// in scenario.seed regardless of worker count).
std::vector<double> simulate_estimates(EstimatorKind estimator, const Scenario& scenario);

/// Nearest-rank Monte Carlo quantiles of |estimate - beta|.
std::vector<double> deviation_quantiles(EstimatorKind estimator, const Scenario& scenario,
                                        const std::vector<double>& probs);

/// One-sided Kolmogorov-Smirnov statistic sup_x (F_a(x) - F_b(x))+ for the
/// hypothesis that sample a first-order dominates sample b.
double ks_dominance(const std::vector<double>& dev_a, const std::vector<double>& dev_b);

/// Nearest-rank median of the estimator minus beta.
double median_bias(EstimatorKind estimator, const Scenario& scenario);

/// Assembles one design point of the sign-calibrated multi-instrument study.
Scenario build_multi_design(const Eigen::VectorXd& pi_direction, const Eigen::MatrixXd& z_gram,
                            double pi_norm, double sigma_uv);

/// Frequency with which the unbiased estimate lies inside the level-AR
/// confidence set. k = 1 only.
double ar_containment(const Scenario& scenario, double level);

/// Mean of the first-stage Wald statistic xi2' Sigma22^-1 xi2 / k,
/// = 1 + pi' Sigma22^-1 pi / k.
double expected_first_stage_f(const Scenario& scenario);

/// Nearest-rank quantile of an unsorted sample.
double nearest_rank_quantile(std::vector<double> sample, double prob);

}  // namespace ivsign

#endif  // IVSIGN_SIMULATION_HPP
