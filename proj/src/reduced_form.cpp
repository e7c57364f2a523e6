#include "ivsign/reduced_form.hpp"

#include <cmath>
#include <utility>

namespace ivsign {

void require_spd(const Eigen::MatrixXd& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw std::invalid_argument(std::string(what) + ": not square");
  }
  const double scale = m.cwiseAbs().maxCoeff();
  if (!m.allFinite()) {
    throw std::invalid_argument(std::string(what) + ": non-finite entries");
  }
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(scale, 1.0)) {
    throw std::invalid_argument(std::string(what) + ": not symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) {
    throw ConditioningError(std::string(what) + ": not positive definite");
  }
}

ReducedFormStats::ReducedFormStats(Eigen::VectorXd xi1_in, Eigen::VectorXd xi2_in,
                                   Eigen::MatrixXd sigma_in)
    : xi1(std::move(xi1_in)), xi2(std::move(xi2_in)), sigma(std::move(sigma_in)) {
  const Eigen::Index kk = xi1.size();
  if (kk < 1 || xi2.size() != kk) {
    throw std::invalid_argument("ReducedFormStats: xi1/xi2 must have equal length k >= 1");
  }
  if (sigma.rows() != 2 * kk || sigma.cols() != 2 * kk) {
    throw std::invalid_argument("ReducedFormStats: sigma must be 2k x 2k");
  }
  if (!xi1.allFinite() || !xi2.allFinite()) {
    throw std::invalid_argument("ReducedFormStats: non-finite coefficients");
  }
  require_spd(sigma, "ReducedFormStats.sigma");
}

Eigen::VectorXd ReducedFormStats::stacked() const {
  Eigen::VectorXd out(2 * k());
  out << xi1, xi2;
  return out;
}

InstrumentBlock::InstrumentBlock(Eigen::Vector2d xi_in, Eigen::Matrix2d sigma_in)
    : xi(std::move(xi_in)), sigma(std::move(sigma_in)) {
  if (!xi.allFinite()) {
    throw std::invalid_argument("InstrumentBlock: non-finite xi");
  }
  require_spd(sigma, "InstrumentBlock.sigma");
}

InstrumentBlock instrument_block(const ReducedFormStats& stats, Eigen::Index i,
                                 double sigma_scale) {
  const Eigen::Index kk = stats.k();
  if (i < 0 || i >= kk) {
    throw std::invalid_argument("instrument_block: index out of range");
  }
  Eigen::Vector2d xi(stats.xi1[i], stats.xi2[i]);
  Eigen::Matrix2d s;
  const double off = 0.5 * (stats.sigma(i, kk + i) + stats.sigma(kk + i, i));
  s << stats.sigma(i, i), off, off, stats.sigma(kk + i, kk + i);
  return InstrumentBlock(xi, sigma_scale * s);
}

InstrumentBlock as_block(const ReducedFormStats& stats) {
  if (stats.k() != 1) {
    throw std::invalid_argument("as_block: requires k = 1");
  }
  return instrument_block(stats, 0);
}

ReducedFormStats as_stats(const InstrumentBlock& block) {
  Eigen::VectorXd a(1), b(1);
  a << block.xi[0];
  b << block.xi[1];
  return ReducedFormStats(a, b, block.sigma);
}

}  // namespace ivsign
