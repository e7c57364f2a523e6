#ifndef IVSIGN_STUDIES_HPP
#define IVSIGN_STUDIES_HPP

#include <string>
#include <vector>

#include "ivsign/multi_iv.hpp"
#include "ivsign/risk_bounds.hpp"
#include "ivsign/simulation.hpp"

namespace ivsign {

/// Quadrature bias of the estimators with a mean, per k = 1 grid point.
struct BiasRow {
  double pi = 0.0, sigma12 = 0.0, e_f = 0.0;
  double bias_unbiased = 0.0, bias_fuller = 0.0;
};
std::vector<BiasRow> run_bias_study(const GridSpec1& grid, int nodes);

/// Absolute-deviation quantiles per estimator and grid point.
struct QuantileRow {
  double pi = 0.0, sigma12 = 0.0;
  std::string estimator;
  double q10 = 0.0, q50 = 0.0, q90 = 0.0;
};
std::vector<QuantileRow> run_quantile_study(const GridSpec1& grid, std::int64_t draws,
                                            std::uint64_t seed);

/// One-sided KS statistics for the dispersion ordering
/// |e_2sls| >= |e_u| >= |e_fuller| of median-centered residuals. The
/// unbiased estimator uses a stream independent of the other two.
struct DominanceRow {
  double pi = 0.0, sigma12 = 0.0;
  double ks_2sls_over_unbiased = 0.0;
  double ks_unbiased_over_fuller = 0.0;
};
std::vector<DominanceRow> run_dominance_study(const GridSpec1& grid, std::int64_t draws,
                                              std::uint64_t seed);

/// Frequency with which the AR set contains the unbiased estimate.
struct ContainmentRow {
  double pi = 0.0, sigma12 = 0.0, e_f = 0.0, level = 0.0, frequency = 0.0;
};
std::vector<ContainmentRow> run_containment_study(const GridSpec1& grid, double level,
                                                  std::int64_t draws, std::uint64_t seed);

/// Tidy result rows of the multi-instrument studies: one row per
/// (estimator x design point). "bound" rows carry the unbiased-risk lower
/// bound; "se" is the Monte Carlo standard error of "value".
struct MultiRow {
  double pi_norm = 0.0, sigma_uv = 0.0, e_f = 0.0;
  std::string estimator;
  double value = 0.0, se = 0.0;
};

struct MultiStudyConfig {
  MultiDesign design;
  std::int64_t outer_draws = 10000;
  std::int64_t s_draws = 1000;
  double c = 0.5;
  std::uint64_t seed = 0;
  bool with_bound = true;       // mad_lower_bound rows
  bool with_fixed_w = false;    // equal fixed-weight combination rows
  bool with_per_instrument = false;  // per-instrument unbiased estimator rows
};

/// Mean absolute deviation of 2SLS, the Rao-Blackwellized estimators (plain
/// and M(c)-recombined, on common draws), and optionally the comparison
/// estimators, against the lower bound.
std::vector<MultiRow> run_multi_mad_study(const MultiStudyConfig& config);

}  // namespace ivsign

#endif  // IVSIGN_STUDIES_HPP
