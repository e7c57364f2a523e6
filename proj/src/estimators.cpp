#include "ivsign/estimators.hpp"

#include <stdexcept>

namespace ivsign {

double tau_hat(double xi2, double sigma2_sq) {
  if (!(sigma2_sq > 0.0) || !std::isfinite(sigma2_sq)) {
    throw std::invalid_argument("tau_hat: sigma2_sq must be positive");
  }
  const double s2 = std::sqrt(sigma2_sq);
  return mills_ratio(xi2 / s2) / s2;
}

double delta_hat(const InstrumentBlock& block) {
  return block.xi[0] - block.sigma(0, 1) / block.sigma(1, 1) * block.xi[1];
}

double beta_u(const InstrumentBlock& block) {
  return beta_u_scalar(block.xi[0], block.xi[1], block.sigma(0, 1), block.sigma(1, 1));
}

double beta_2sls_single(const InstrumentBlock& block) {
  if (block.xi[1] == 0.0) {
    throw std::invalid_argument("beta_2sls_single: first-stage coefficient is zero");
  }
  return block.xi[0] / block.xi[1];
}

double beta_fuller(const InstrumentBlock& block) {
  const double xi1 = block.xi[0];
  const double xi2 = block.xi[1];
  return (xi2 * xi1 + block.sigma(0, 1)) / (xi2 * xi2 + block.sigma(1, 1));
}

}  // namespace ivsign
