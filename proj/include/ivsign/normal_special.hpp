#ifndef IVSIGN_NORMAL_SPECIAL_HPP
#define IVSIGN_NORMAL_SPECIAL_HPP

namespace ivsign {

/// Standard normal cdf Phi(x). Throws std::invalid_argument on non-finite input.
double std_normal_cdf(double x);

/// Standard normal density phi(x).
double std_normal_pdf(double x);

/// Mills ratio (1 - Phi(x)) / phi(x).
///
/// Evaluated without forming the naive quotient in the tails: for x >= 8 a
/// Laplace continued fraction, for 0 <= x < 8 the erfc/phi quotient (no
/// underflow there), and for x < 0 the reflected form 0.5*erfc(x/sqrt(2)) *
/// sqrt(2*pi) * exp(x^2/2). The true value exceeds DBL_MAX once
/// x < -37.66 or so; the result saturates to +infinity there.
double mills_ratio(double x);

}  // namespace ivsign

#endif  // IVSIGN_NORMAL_SPECIAL_HPP
