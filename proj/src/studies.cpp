#include "ivsign/studies.hpp"

#include <algorithm>
#include <cmath>

#include "ivsign/estimators.hpp"
#include "ivsign/rng.hpp"

namespace ivsign {

namespace {

// Independent child seeds for the sub-streams of one study.
std::uint64_t child_seed(std::uint64_t seed, std::uint64_t tag) {
  return mix64(mix64(seed ^ 0xc2b2ae3d27d4eb4fULL) + tag);
}

struct DevAccum {
  double sum = 0.0, sumsq = 0.0;
  void add(double est, double beta) {
    const double d = std::fabs(est - beta);
    sum += d;
    sumsq += d * d;
  }
  McValue finish(std::int64_t n) const {
    McValue out;
    out.value = sum / static_cast<double>(n);
    const double var = std::max(
        0.0, (sumsq - static_cast<double>(n) * out.value * out.value) / static_cast<double>(n - 1));
    out.std_error = std::sqrt(var / static_cast<double>(n));
    out.draws = n;
    return out;
  }
  DevAccum& operator+=(const DevAccum& o) {
    sum += o.sum;
    sumsq += o.sumsq;
    return *this;
  }
};

}  // namespace

std::vector<BiasRow> run_bias_study(const GridSpec1& grid, int nodes) {
  std::vector<BiasRow> rows;
  for (double s12 : grid.sigma12_values) {
    for (double pi : grid.pi_values) {
      BiasRow row;
      row.pi = pi;
      row.sigma12 = s12;
      row.e_f = 1.0 + pi * pi;
      row.bias_unbiased = bias_quadrature(EstimatorKind::Unbiased, pi, s12, nodes);
      row.bias_fuller = bias_quadrature(EstimatorKind::Fuller, pi, s12, nodes);
      rows.push_back(row);
    }
  }
  return rows;
}

namespace {

Scenario canonical_scenario(double pi, double sigma12, std::int64_t draws, std::uint64_t seed) {
  Scenario s;
  s.pi = Eigen::VectorXd::Constant(1, pi);
  s.beta = 0.0;
  s.sigma.resize(2, 2);
  s.sigma << 1.0, sigma12, sigma12, 1.0;
  s.n_draws = draws;
  s.seed = seed;
  return s;
}

}  // namespace

std::vector<QuantileRow> run_quantile_study(const GridSpec1& grid, std::int64_t draws,
                                            std::uint64_t seed) {
  const std::vector<double> probs = {0.1, 0.5, 0.9};
  std::vector<QuantileRow> rows;
  std::uint64_t point = 0;
  for (double s12 : grid.sigma12_values) {
    for (double pi : grid.pi_values) {
      const std::uint64_t point_seed = child_seed(seed, point++);
      const struct {
        EstimatorKind kind;
        const char* name;
      } estimators[] = {{EstimatorKind::Unbiased, "unbiased"},
                        {EstimatorKind::TwoSls, "2sls"},
                        {EstimatorKind::Fuller, "fuller"}};
      for (const auto& [kind, name] : estimators) {
        Scenario scen = canonical_scenario(pi, s12, draws, child_seed(point_seed, 1));
        const std::vector<double> q = deviation_quantiles(kind, scen, probs);
        rows.push_back(QuantileRow{pi, s12, name, q[0], q[1], q[2]});
      }
    }
  }
  return rows;
}

std::vector<DominanceRow> run_dominance_study(const GridSpec1& grid, std::int64_t draws,
                                              std::uint64_t seed) {
  std::vector<DominanceRow> rows;
  std::uint64_t point = 0;
  for (double s12 : grid.sigma12_values) {
    for (double pi : grid.pi_values) {
      const std::uint64_t point_seed = child_seed(seed, point++);
      // The unbiased estimator draws from a stream independent of the one
      // shared by 2SLS and Fuller.
      Scenario scen_u = canonical_scenario(pi, s12, draws, child_seed(point_seed, 1));
      Scenario scen_pair = canonical_scenario(pi, s12, draws, child_seed(point_seed, 2));
      std::vector<double> eu = simulate_estimates(EstimatorKind::Unbiased, scen_u);
      std::vector<double> e2 = simulate_estimates(EstimatorKind::TwoSls, scen_pair);
      std::vector<double> ef = simulate_estimates(EstimatorKind::Fuller, scen_pair);
      auto center_abs = [](std::vector<double>& v) {
        const double med = nearest_rank_quantile(v, 0.5);
        for (double& x : v) x = std::fabs(x - med);
      };
      center_abs(eu);
      center_abs(e2);
      center_abs(ef);
      DominanceRow row;
      row.pi = pi;
      row.sigma12 = s12;
      row.ks_2sls_over_unbiased = ks_dominance(e2, eu);
      row.ks_unbiased_over_fuller = ks_dominance(eu, ef);
      rows.push_back(row);
    }
  }
  return rows;
}

std::vector<ContainmentRow> run_containment_study(const GridSpec1& grid, double level,
                                                  std::int64_t draws, std::uint64_t seed) {
  std::vector<ContainmentRow> rows;
  std::uint64_t point = 0;
  for (double s12 : grid.sigma12_values) {
    for (double pi : grid.pi_values) {
      Scenario scen = canonical_scenario(pi, s12, draws, child_seed(seed, point++));
      ContainmentRow row;
      row.pi = pi;
      row.sigma12 = s12;
      row.e_f = 1.0 + pi * pi;
      row.level = level;
      row.frequency = ar_containment(scen, level);
      rows.push_back(row);
    }
  }
  return rows;
}

std::vector<MultiRow> run_multi_mad_study(const MultiStudyConfig& config) {
  const MultiDesign& design = config.design;
  const Eigen::Index k = design.pi_direction.size();
  if (config.outer_draws < 2 || config.s_draws < 1) {
    throw std::invalid_argument("run_multi_mad_study: need outer_draws >= 2 and s_draws >= 1");
  }

  std::vector<MultiRow> rows;
  std::uint64_t point = 0;
  for (double suv : design.sigma_uv_values) {
    for (double pn : design.pi_norm_values) {
      const std::uint64_t point_seed = child_seed(config.seed, point++);
      Scenario scen = build_multi_design(design.pi_direction, design.z_gram, pn, suv);
      const double ef = expected_first_stage_f(scen);

      Eigen::LLT<Eigen::MatrixXd> llt(scen.sigma);
      const Eigen::MatrixXd l = llt.matrixL();
      Eigen::VectorXd mean(2 * k);
      mean.head(k).setZero();
      mean.tail(k) = scen.pi;

      const WeightSpec quad = WeightSpec::quadratic(design.z_gram);
      const std::vector<RbVariant> variants = {RbVariant{quad, 0.0, false},
                                               RbVariant{quad, config.c, true}};
      const Eigen::VectorXd w_equal =
          Eigen::VectorXd::Constant(k, 1.0 / static_cast<double>(k));

      // Accumulator layout: [2sls, rb_star, rb_c, beta_w?, beta_u_i...].
      std::size_t n_est = 3;
      const std::size_t idx_w = config.with_fixed_w ? n_est++ : 0;
      const std::size_t idx_u0 = config.with_per_instrument ? n_est : 0;
      if (config.with_per_instrument) n_est += static_cast<std::size_t>(k);

      const std::int64_t n_chunks = n_chunks_for(config.outer_draws);
      std::vector<std::vector<DevAccum>> acc(
          n_chunks, std::vector<DevAccum>(n_est));
      const std::uint64_t xi_root = child_seed(point_seed, 101);
      const std::uint64_t rb_root = child_seed(point_seed, 202);

      for_each_chunk(n_chunks, [&](std::int64_t chunk) {
        RandomStream rng(substream_seed(xi_root, static_cast<std::uint64_t>(chunk)));
        const std::int64_t lo = chunk * kMcChunk;
        const std::int64_t hi = std::min(lo + kMcChunk, config.outer_draws);
        Eigen::VectorXd n2k(2 * k);
        std::vector<DevAccum>& a = acc[chunk];
        for (std::int64_t j = lo; j < hi; ++j) {
          rng.normals(n2k);
          const Eigen::VectorXd xi = mean + l * n2k;
          ReducedFormStats stats(xi.head(k), xi.tail(k), scen.sigma);
          a[0].add(beta_2sls_multi(stats, design.z_gram), scen.beta);
          const std::vector<RbEstimate> rb = beta_rb_shared(
              stats, design.z_gram, variants, config.s_draws,
              substream_seed(rb_root, static_cast<std::uint64_t>(j)));
          a[1].add(rb[0].value, scen.beta);
          a[2].add(rb[1].value, scen.beta);
          if (config.with_fixed_w) a[idx_w].add(beta_w(stats, w_equal), scen.beta);
          if (config.with_per_instrument) {
            for (Eigen::Index i = 0; i < k; ++i) {
              a[idx_u0 + static_cast<std::size_t>(i)].add(
                  beta_u(instrument_block(stats, i)), scen.beta);
            }
          }
        }
      });

      std::vector<DevAccum> total(n_est);
      for (std::int64_t c = 0; c < n_chunks; ++c) {
        for (std::size_t e = 0; e < n_est; ++e) total[e] += acc[c][e];
      }
      auto push = [&](const std::string& name, const McValue& mc) {
        rows.push_back(MultiRow{pn, suv, ef, name, mc.value, mc.std_error});
      };
      push("2sls", total[0].finish(config.outer_draws));
      push("rb_star", total[1].finish(config.outer_draws));
      push("rb_c", total[2].finish(config.outer_draws));
      if (config.with_fixed_w) push("beta_w_equal", total[idx_w].finish(config.outer_draws));
      if (config.with_per_instrument) {
        for (Eigen::Index i = 0; i < k; ++i) {
          push("beta_u_" + std::to_string(i + 1),
               total[idx_u0 + static_cast<std::size_t>(i)].finish(config.outer_draws));
        }
      }
      if (config.with_bound) {
        const McValue bound = mad_lower_bound(scen.pi, scen.beta, scen.sigma,
                                              config.outer_draws, child_seed(point_seed, 303));
        push("bound", bound);
      }
    }
  }
  return rows;
}

}  // namespace ivsign
