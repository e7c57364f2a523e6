#ifndef IVSIGN_ANDERSON_RUBIN_HPP
#define IVSIGN_ANDERSON_RUBIN_HPP

#include <limits>

#include "ivsign/reduced_form.hpp"

namespace ivsign {

/// Geometry of an inverted Anderson-Rubin test. An interval with an infinite
/// endpoint represents a single ray (only reachable through a degenerate
/// leading coefficient).
struct ConfidenceSet {
  enum class Kind { Interval, UnionOfRays, WholeLine, Empty };

  Kind kind = Kind::Empty;
  // Interval: [lower, upper]. UnionOfRays: (-inf, lower] u [upper, +inf)
  // with lower < upper.
  double lower = std::numeric_limits<double>::quiet_NaN();
  double upper = std::numeric_limits<double>::quiet_NaN();
  double level = 0.0;

  bool contains(double beta) const;
};

/// AR statistic (xi1 - b*xi2)^2 / (s1^2 - 2b*s12 + b^2*s2^2) at beta = b.
double ar_statistic(const InstrumentBlock& block, double beta0);

/// Exact inversion of {b : AR(b) <= chi2_1 quantile at `level`} from the
/// roots of the quadratic. Requires level in (0, 1).
ConfidenceSet ar_confidence_set(const InstrumentBlock& block, double level);

/// Standard normal quantile (Wichura's AS 241 rational approximation,
/// accurate to well below 1e-10). Requires p in (0, 1).
double normal_quantile(double p);

/// Quantile of the chi-squared distribution with one degree of freedom.
double chi_squared_1_quantile(double level);

}  // namespace ivsign

#endif  // IVSIGN_ANDERSON_RUBIN_HPP
