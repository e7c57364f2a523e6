#ifndef IVSIGN_RISK_BOUNDS_HPP
#define IVSIGN_RISK_BOUNDS_HPP

#include <cstdint>

#include "ivsign/reduced_form.hpp"

namespace ivsign {

/// GLS projection of xi onto a known first-stage direction: a 2-vector
/// statistic and its 2x2 covariance. The submodel restricts pi to the ray
/// {pi_star * t : t > 0}.
struct SubmodelStats {
  Eigen::Vector2d xi_star;
  Eigen::Matrix2d sigma_star;
};

/// xi_star = [(I2 (x) pi*)' S^-1 (I2 (x) pi*)]^-1 (I2 (x) pi*)' S^-1 xi and
/// the bracketed inverse as its covariance. Requires pi_star != 0.
SubmodelStats submodel_stats(const ReducedFormStats& stats, const Eigen::VectorXd& pi_star);

/// The unbiased estimator applied to the submodel statistic. Attains the
/// unbiased-risk lower bound when the projection is a common instrument
/// recombination (e.g. Kronecker covariance with Qz^-1 pi* > 0).
double oracle_beta(const ReducedFormStats& stats, const Eigen::VectorXd& pi_star);

/// A Monte Carlo scalar with its standard error.
struct McValue {
  double value = 0.0;
  double std_error = 0.0;
  std::int64_t draws = 0;
};

/// Monte Carlo estimate of E|oracle_beta - beta| with pi* set to the true
/// pi: the lower bound on the mean absolute deviation of any estimator that
/// is unbiased over the positive orthant.
McValue mad_lower_bound(const Eigen::VectorXd& pi, double beta, const Eigen::MatrixXd& sigma,
                        std::int64_t n_draws, std::uint64_t seed);

}  // namespace ivsign

#endif  // IVSIGN_RISK_BOUNDS_HPP
