#ifndef IVSIGN_ESTIMATORS_HPP
#define IVSIGN_ESTIMATORS_HPP

#include <cmath>

#include "ivsign/normal_special.hpp"
#include "ivsign/reduced_form.hpp"

namespace ivsign {

/// Unbiased estimator of 1/pi from the first-stage coefficient alone:
/// tau(xi2, s2^2) = mills_ratio(xi2 / s2) / s2. Requires sigma2_sq > 0.
double tau_hat(double xi2, double sigma2_sq);

/// delta(xi, Sigma) = xi1 - (s12 / s2^2) * xi2; independent of xi2.
double delta_hat(const InstrumentBlock& block);

/// Single-instrument unbiased estimator:
/// beta_u = tau(xi2, s2^2) * delta + s12 / s2^2.
double beta_u(const InstrumentBlock& block);

/// Conventional single-instrument IV estimate xi1 / xi2. Throws on xi2 == 0.
double beta_2sls_single(const InstrumentBlock& block);

/// Fuller estimator with constant one: (xi2*xi1 + s12) / (xi2^2 + s2^2).
/// Finite for every input since the denominator is at least s2^2.
double beta_fuller(const InstrumentBlock& block);

/// Unchecked scalar core of beta_u; sigma1^2 does not enter the estimator.
/// Monte Carlo inner loops call this with precomputed block entries.
inline double beta_u_scalar(double xi1, double xi2, double s12, double s2_sq) {
  const double s2 = std::sqrt(s2_sq);
  const double ratio = s12 / s2_sq;
  return mills_ratio(xi2 / s2) / s2 * (xi1 - ratio * xi2) + ratio;
}

}  // namespace ivsign

#endif  // IVSIGN_ESTIMATORS_HPP
