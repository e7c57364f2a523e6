#ifndef IVSIGN_MULTI_IV_HPP
#define IVSIGN_MULTI_IV_HPP

#include <cstdint>
#include <vector>

#include "ivsign/reduced_form.hpp"
#include "ivsign/rng.hpp"

namespace ivsign {

/// Raised when combination weights cannot be formed (zero or unstable
/// quadratic-form denominator) often enough to matter.
class DegenerateWeightError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// How the per-instrument combination weights w(xi2_b) are computed.
struct WeightSpec {
  enum class Kind { Fixed, Quadratic, GmmTwoStep };

  Kind kind = Kind::Quadratic;
  Eigen::VectorXd fixed_weights;      // Fixed: sums to 1 (not necessarily >= 0)
  Eigen::MatrixXd quadratic_weight;   // Quadratic: SPD k x k matrix

  static WeightSpec fixed(Eigen::VectorXd w);
  static WeightSpec quadratic(Eigen::MatrixXd w_matrix);
  /// Two-step weights: preliminary 2SLS estimate on the b-half with the
  /// z_gram weight matrix, then W = (S11 - b(S12+S21) + b^2 S22)^{-1}.
  static WeightSpec gmm_two_step();
};

/// Split-sample pair (xi + zeta, xi - zeta); each half has variance 2*Sigma
/// and the halves are independent.
struct SplitPair {
  Eigen::VectorXd xi_a;
  Eigen::VectorXd xi_b;
};

/// Monte Carlo average over S zeta-draws together with its standard error.
struct RbEstimate {
  double value = 0.0;
  double mc_std_error = 0.0;
  std::int64_t draws = 0;
  std::int64_t degenerate_draws = 0;
};

/// Instrument recombination M(c) = C(c) * Diag(Sigma22)^{-1/2}, where C(c)
/// has unit diagonal and constant off-diagonal c in [0, 1). All entries of M
/// are strictly positive for c > 0.
struct RobustTransform {
  double c = 0.0;
  Eigen::MatrixXd m;
  Eigen::MatrixXd m_inverse;
};

/// Result of applying M(c): transformed statistic, transformed quadratic
/// weight matrix, and the transform itself.
struct TransformedModel {
  ReducedFormStats stats;
  Eigen::MatrixXd w_matrix;
  RobustTransform transform;
};

/// GMM estimator xi2' W xi1 / xi2' W xi2.
double beta_2sls_multi(const ReducedFormStats& stats, const Eigen::MatrixXd& w_matrix);

/// Two-step GMM weighting matrix (S11 - b(S12+S21) + b^2 S22)^{-1} evaluated
/// at a preliminary estimate b. Throws ConditioningError if the inner matrix
/// is not positive definite.
Eigen::MatrixXd gmm_two_step_weight(const ReducedFormStats& stats, double preliminary_beta);

/// Draws zeta ~ N(0, Sigma) through a Cholesky factor of Sigma and returns
/// (xi + zeta, xi - zeta).
SplitPair split_draw(const ReducedFormStats& stats, RandomStream& rng);

/// Combination weights from the first-stage half xi2_b. Supports Fixed and
/// Quadratic specs; weights sum to 1 and are invariant to positive scaling
/// of xi2_b.
Eigen::VectorXd rb_weights(const Eigen::VectorXd& xi2_b, const WeightSpec& spec,
                           const Eigen::MatrixXd& z_gram);

/// General form, required for GmmTwoStep: the preliminary estimate uses the
/// full b-half and the weighting matrix uses the covariance blocks of stats.
Eigen::VectorXd rb_weights(const Eigen::VectorXd& xi1_b, const Eigen::VectorXd& xi2_b,
                           const WeightSpec& spec, const Eigen::MatrixXd& z_gram,
                           const ReducedFormStats& stats);

/// Fixed-weight combination of per-instrument unbiased estimators:
/// sum_i w_i * beta_u(xi(i), Sigma(i)). Weights must sum to 1 (tol 1e-10).
double beta_w(const ReducedFormStats& stats, const Eigen::VectorXd& w);

/// Rao-Blackwellized estimator: averages
///   sum_i w_i(xi_b_s) * beta_u(xi_a_s(i), 2*Sigma(i))
/// over S draws of zeta. Deterministic in (seed, s_draws) regardless of the
/// worker count. Throws DegenerateWeightError if more than 0.1% of draws
/// have degenerate weights.
RbEstimate beta_rb(const ReducedFormStats& stats, const WeightSpec& spec,
                   const Eigen::MatrixXd& z_gram, std::int64_t s_draws,
                   std::uint64_t seed);

/// Applies M(c) to (stats, z_gram). Round-tripping through m_inverse
/// recovers the inputs.
TransformedModel robust_transform(const ReducedFormStats& stats,
                                  const Eigen::MatrixXd& z_gram, double c);

/// beta_rb on the M(c)-transformed model. With c = 0 and unit Sigma22
/// diagonal this reproduces beta_rb draw for draw.
RbEstimate beta_rb_c(const ReducedFormStats& stats, const Eigen::MatrixXd& z_gram,
                     double c, const WeightSpec& spec, std::int64_t s_draws,
                     std::uint64_t seed);

/// One estimator variant evaluated by beta_rb_shared. use_transform selects
/// the M(c) recombination; spec matrices are given in the original
/// coordinates and transformed internally.
struct RbVariant {
  WeightSpec spec;
  double c = 0.0;
  bool use_transform = false;
};

/// Evaluates several weight schemes on common zeta-draws (common random
/// numbers): one underlying N(0, Sigma) draw per s, mapped through M(c) for
/// transformed variants. With a single untransformed variant this matches
/// beta_rb exactly.
std::vector<RbEstimate> beta_rb_shared(const ReducedFormStats& stats,
                                       const Eigen::MatrixXd& z_gram,
                                       const std::vector<RbVariant>& variants,
                                       std::int64_t s_draws, std::uint64_t seed);

}  // namespace ivsign

#endif  // IVSIGN_MULTI_IV_HPP
