#ifndef IVSIGN_REDUCED_FORM_HPP
#define IVSIGN_REDUCED_FORM_HPP

#include <Eigen/Dense>
#include <stdexcept>

namespace ivsign {

/// Numerical failure of a factorization or inversion (ill-conditioned or
/// non-positive-definite input).
class ConditioningError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Sufficient statistic for the reduced-form model: stacked OLS coefficients
/// xi = (xi1', xi2')' of the outcome and first-stage regressions on k
/// instruments, jointly normal with covariance sigma (2k x 2k, ordered to
/// match the stacking).
struct ReducedFormStats {
  Eigen::VectorXd xi1;    // reduced-form coefficients, length k
  Eigen::VectorXd xi2;    // first-stage coefficients, length k
  Eigen::MatrixXd sigma;  // covariance of (xi1', xi2')', 2k x 2k

  ReducedFormStats(Eigen::VectorXd xi1_in, Eigen::VectorXd xi2_in,
                   Eigen::MatrixXd sigma_in);

  Eigen::Index k() const { return xi1.size(); }

  Eigen::VectorXd stacked() const;

  // Covariance blocks.
  Eigen::MatrixXd sigma11() const { return sigma.topLeftCorner(k(), k()); }
  Eigen::MatrixXd sigma12() const { return sigma.topRightCorner(k(), k()); }
  Eigen::MatrixXd sigma21() const { return sigma.bottomLeftCorner(k(), k()); }
  Eigen::MatrixXd sigma22() const { return sigma.bottomRightCorner(k(), k()); }
};

/// Coefficients and 2x2 covariance attached to a single instrument.
struct InstrumentBlock {
  Eigen::Vector2d xi;     // (xi1_i, xi2_i)
  Eigen::Matrix2d sigma;  // [[s1^2, s12], [s12, s2^2]]

  InstrumentBlock(Eigen::Vector2d xi_in, Eigen::Matrix2d sigma_in);
};

/// Extracts the block for instrument i (0-based), optionally scaling the
/// covariance (the split-sample halves have variance 2*Sigma).
InstrumentBlock instrument_block(const ReducedFormStats& stats, Eigen::Index i,
                                 double sigma_scale = 1.0);

/// Checked conversion: a k = 1 ReducedFormStats is a single InstrumentBlock.
InstrumentBlock as_block(const ReducedFormStats& stats);

/// Checked conversion in the other direction.
ReducedFormStats as_stats(const InstrumentBlock& block);

/// Throws unless m is symmetric (to a relative tolerance) and positive
/// definite (Cholesky succeeds). `what` names the offending matrix.
void require_spd(const Eigen::MatrixXd& m, const char* what);

}  // namespace ivsign

#endif  // IVSIGN_REDUCED_FORM_HPP
