#ifndef IVSIGN_GAUSS_HERMITE_HPP
#define IVSIGN_GAUSS_HERMITE_HPP

#include <Eigen/Dense>

namespace ivsign {

/// Gauss-Hermite rule for weight exp(-x^2): sum_i w_i f(x_i) approximates
/// the integral of f(x) exp(-x^2). Nodes are in increasing order. Weights of
/// the extreme nodes underflow to exactly zero for large n; callers skip
/// zero-weight nodes.
struct GaussHermiteRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};

/// Golub-Welsch construction (symmetric tridiagonal eigenproblem). Results
/// for each n are cached behind a mutex; the returned reference stays valid
/// for the lifetime of the program.
const GaussHermiteRule& gauss_hermite(int n);

}  // namespace ivsign

#endif  // IVSIGN_GAUSS_HERMITE_HPP
