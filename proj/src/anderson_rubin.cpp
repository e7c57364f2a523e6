#include "ivsign/anderson_rubin.hpp"

#include <cmath>
#include <stdexcept>

namespace ivsign {

namespace {

// Coefficients of Wichura's algorithm AS 241 (PPND16).
double ppnd16(double p) {
  const double q = p - 0.5;
  double r;
  if (std::fabs(q) <= 0.425) {
    r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                 6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
               1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
             1.3314166789178437745e2) * r + 3.3871328727963666080e0) /
           (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                 3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
               5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
             4.2313330701600911252e1) * r + 1.0);
  }
  r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double x;
  if (r <= 5.0) {
    r -= 1.6;
    x = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
              2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
            3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
          4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
        (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
              1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
            6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
          2.05319162663775882187e0) * r + 1.0);
  } else {
    r -= 5.0;
    x = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
              1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
            2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
          5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
        (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
              1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
            1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
          5.99832206555887937690e-1) * r + 1.0);
  }
  return q < 0.0 ? -x : x;
}

}  // namespace

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument("normal_quantile: p must lie in (0, 1)");
  }
  return ppnd16(p);
}

double chi_squared_1_quantile(double level) {
  if (!(level > 0.0 && level < 1.0)) {
    throw std::invalid_argument("chi_squared_1_quantile: level must lie in (0, 1)");
  }
  const double z = normal_quantile(0.5 * (1.0 + level));
  return z * z;
}

double ar_statistic(const InstrumentBlock& block, double beta0) {
  const double num = block.xi[0] - beta0 * block.xi[1];
  const double den = block.sigma(0, 0) - 2.0 * beta0 * block.sigma(0, 1) +
                     beta0 * beta0 * block.sigma(1, 1);
  return num * num / den;
}

bool ConfidenceSet::contains(double beta) const {
  switch (kind) {
    case Kind::Interval:
      return beta >= lower && beta <= upper;
    case Kind::UnionOfRays:
      return beta <= lower || beta >= upper;
    case Kind::WholeLine:
      return true;
    case Kind::Empty:
      return false;
  }
  return false;
}

ConfidenceSet ar_confidence_set(const InstrumentBlock& block, double level) {
  if (!(level > 0.0 && level < 1.0)) {
    throw std::invalid_argument("ar_confidence_set: level must lie in (0, 1)");
  }
  const double q = chi_squared_1_quantile(level);
  const double xi1 = block.xi[0], xi2 = block.xi[1];
  const double s1sq = block.sigma(0, 0), s12 = block.sigma(0, 1),
               s2sq = block.sigma(1, 1);

  // {b : a*b^2 + bb*b + c <= 0} with
  const double a = xi2 * xi2 - q * s2sq;
  const double bb = -2.0 * xi1 * xi2 + 2.0 * q * s12;
  const double c = xi1 * xi1 - q * s1sq;

  ConfidenceSet set;
  set.level = level;

  const double scale = std::max({std::fabs(xi2 * xi2), q * s2sq, 1e-300});
  if (std::fabs(a) <= 1e-14 * scale) {
    // Degenerate leading coefficient: linear inequality bb*b + c <= 0.
    const double inf = std::numeric_limits<double>::infinity();
    if (bb > 0.0) {
      set.kind = ConfidenceSet::Kind::Interval;
      set.lower = -inf;
      set.upper = -c / bb;
    } else if (bb < 0.0) {
      set.kind = ConfidenceSet::Kind::Interval;
      set.lower = -c / bb;
      set.upper = inf;
    } else {
      set.kind = c <= 0.0 ? ConfidenceSet::Kind::WholeLine : ConfidenceSet::Kind::Empty;
    }
    return set;
  }

  const double disc = bb * bb - 4.0 * a * c;
  if (a > 0.0) {
    if (disc <= 0.0) {
      // Only possible through rounding: the parabola value at xi1/xi2 is
      // -q * (s1^2 - 2b*s12 + b^2*s2^2) < 0, so real roots exist.
      set.kind = ConfidenceSet::Kind::Empty;
      return set;
    }
    const double sq = std::sqrt(disc);
    set.kind = ConfidenceSet::Kind::Interval;
    set.lower = (-bb - sq) / (2.0 * a);
    set.upper = (-bb + sq) / (2.0 * a);
    return set;
  }
  // a < 0: parabola opens downward.
  if (disc <= 0.0) {
    set.kind = ConfidenceSet::Kind::WholeLine;
    return set;
  }
  const double sq = std::sqrt(disc);
  // Roots in increasing order; the set is the complement of the open interval.
  set.kind = ConfidenceSet::Kind::UnionOfRays;
  set.lower = (-bb + sq) / (2.0 * a);
  set.upper = (-bb - sq) / (2.0 * a);
  return set;
}

}  // namespace ivsign
