#include "ivsign/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "ivsign/anderson_rubin.hpp"
#include "ivsign/covariance.hpp"
#include "ivsign/estimators.hpp"
#include "ivsign/io.hpp"
#include "ivsign/multi_iv.hpp"
#include "ivsign/studies.hpp"

namespace ivsign {

const char* const kVersion = "0.1.0";

namespace {

namespace fs = std::filesystem;
using io::format_double;

WeightSpec parse_weight(const std::string& weight, const Eigen::MatrixXd& z_gram) {
  if (weight == "zgram") return WeightSpec::quadratic(z_gram);
  if (weight == "gmm2") return WeightSpec::gmm_two_step();
  if (weight.rfind("fixed:", 0) == 0) {
    std::vector<double> w;
    std::stringstream ss(weight.substr(6));
    std::string item;
    while (std::getline(ss, item, ',')) {
      w.push_back(std::stod(item));
    }
    return WeightSpec::fixed(Eigen::Map<const Eigen::VectorXd>(
        w.data(), static_cast<Eigen::Index>(w.size())));
  }
  throw std::invalid_argument("unknown weight spec '" + weight +
                              "'; expected zgram, gmm2, or fixed:w1,w2,...");
}

std::string format_set(const ConfidenceSet& set) {
  switch (set.kind) {
    case ConfidenceSet::Kind::Interval: {
      const std::string lo =
          std::isinf(set.lower) ? "-inf" : format_double(set.lower);
      const std::string hi = std::isinf(set.upper) ? "inf" : format_double(set.upper);
      return "[" + lo + ", " + hi + "]";
    }
    case ConfidenceSet::Kind::UnionOfRays:
      return "(-inf, " + format_double(set.lower) + "] U [" + format_double(set.upper) +
             ", inf)";
    case ConfidenceSet::Kind::WholeLine:
      return "(-inf, inf)";
    case ConfidenceSet::Kind::Empty:
      return "{}";
  }
  return "{}";
}

void write_report(const std::string& path, const std::string& text) {
  if (path.empty()) return;
  std::ofstream out(path);
  if (!out) {
    throw CsvError("cannot open output file '" + path + "'");
  }
  out << text;
}

int cmd_estimate(const RunConfig& config, std::ostream& out) {
  const IvDataset data = load_iv_csv(config.input_path, config.intercept, config.cluster_col);
  const PipelineResult pipe = run_pipeline(data);
  const Eigen::Index k = pipe.stats.k();
  const std::int64_t s_draws = config.zeta_draws > 0 ? config.zeta_draws : 100000;

  std::ostringstream rep;
  rep << "input             = " << config.input_path << "\n";
  rep << "rows              = " << data.rows() << "\n";
  rep << "instruments (k)   = " << k << "\n";
  rep << "controls (p)      = " << data.controls.cols() << "\n";
  rep << "vcov              = " << (data.cluster_ids ? "clustered" : "robust") << "\n";
  for (Eigen::Index i = 0; i < k; ++i) {
    rep << "xi1[" << i + 1 << "]            = " << format_double(pipe.stats.xi1[i])
        << "  (se " << format_double(std::sqrt(pipe.stats.sigma(i, i))) << ")\n";
  }
  for (Eigen::Index i = 0; i < k; ++i) {
    rep << "xi2[" << i + 1 << "]            = " << format_double(pipe.stats.xi2[i])
        << "  (se " << format_double(std::sqrt(pipe.stats.sigma(k + i, k + i))) << ")\n";
  }
  rep << "first_stage_F     = " << format_double(pipe.first_stage_f) << "\n";

  if (k == 1) {
    const InstrumentBlock block = as_block(pipe.stats);
    rep << "beta_2sls         = " << format_double(beta_2sls_single(block)) << "\n";
    rep << "beta_fuller       = " << format_double(beta_fuller(block)) << "\n";
    rep << "beta_unbiased     = " << format_double(beta_u(block)) << "\n";
    const ConfidenceSet set = ar_confidence_set(block, config.level);
    rep << "ar_set(" << format_double(config.level) << ")      = " << format_set(set) << "\n";
  } else {
    rep << "beta_2sls         = "
        << format_double(beta_2sls_multi(pipe.stats, pipe.fit.z_gram)) << "\n";
    const WeightSpec spec = parse_weight(config.weight, pipe.fit.z_gram);
    const RbEstimate rb =
        beta_rb_c(pipe.stats, pipe.fit.z_gram, config.c, spec, s_draws, config.seed);
    rep << "beta_rb_c         = " << format_double(rb.value) << "  (mc se "
        << format_double(rb.mc_std_error) << ", c = " << format_double(config.c)
        << ", S = " << rb.draws << ", weight = " << config.weight << ")\n";
  }
  const std::string text = rep.str();
  out << text;
  write_report(config.out_path, text);
  return 0;
}

GridSpec1 grid_from_config(const RunConfig& config) {
  GridSpec1 grid = GridSpec1::defaults();
  if (!config.pi_values.empty()) grid.pi_values = config.pi_values;
  if (!config.sigma12_values.empty()) grid.sigma12_values = config.sigma12_values;
  return grid;
}

nlohmann::json grid_json(const GridSpec1& grid) {
  return nlohmann::json{{"pi", grid.pi_values}, {"sigma12", grid.sigma12_values}};
}

int cmd_simulate(const RunConfig& config, std::ostream& out) {
  const GridSpec1 grid = grid_from_config(config);
  const std::int64_t draws = config.draws > 0 ? config.draws : 100000;
  fs::create_directories(config.out_path);
  const std::string manifest = (fs::path(config.out_path) / "manifest.jsonl").string();

  auto manifest_entry = [&](const std::string& table, const std::string& path,
                            nlohmann::json extra) {
    extra["command"] = "simulate";
    extra["table"] = table;
    extra["path"] = path;
    extra["seed"] = config.seed;
    extra["version"] = kVersion;
    extra["grid"] = grid_json(grid);
    io::append_manifest_line(manifest, extra);
  };

  {
    const std::string path = (fs::path(config.out_path) / "bias.csv").string();
    std::vector<std::vector<std::string>> rows;
    for (const BiasRow& r : run_bias_study(grid, config.nodes)) {
      rows.push_back({format_double(r.pi), format_double(r.sigma12), format_double(r.e_f),
                      format_double(r.bias_unbiased), format_double(r.bias_fuller)});
    }
    io::write_csv(path, "ivsign-bias-v1",
                  {"pi", "sigma12", "e_f", "bias_unbiased", "bias_fuller"}, rows);
    manifest_entry("bias", path, {{"nodes", config.nodes}});
    out << "wrote " << path << "\n";
  }
  {
    const std::string path = (fs::path(config.out_path) / "quantiles.csv").string();
    std::vector<std::vector<std::string>> rows;
    for (const QuantileRow& r : run_quantile_study(grid, draws, config.seed)) {
      rows.push_back({format_double(r.pi), format_double(r.sigma12), r.estimator,
                      format_double(r.q10), format_double(r.q50), format_double(r.q90)});
    }
    io::write_csv(path, "ivsign-quantiles-v1",
                  {"pi", "sigma12", "estimator", "q10", "q50", "q90"}, rows);
    manifest_entry("quantiles", path, {{"draws", draws}});
    out << "wrote " << path << "\n";
  }
  {
    const std::string path = (fs::path(config.out_path) / "dominance.csv").string();
    std::vector<std::vector<std::string>> rows;
    for (const DominanceRow& r : run_dominance_study(grid, draws, config.seed)) {
      rows.push_back({format_double(r.pi), format_double(r.sigma12),
                      format_double(r.ks_2sls_over_unbiased),
                      format_double(r.ks_unbiased_over_fuller)});
    }
    io::write_csv(path, "ivsign-dominance-v1",
                  {"pi", "sigma12", "ks_2sls_over_unbiased", "ks_unbiased_over_fuller"}, rows);
    manifest_entry("dominance", path, {{"draws", draws}});
    out << "wrote " << path << "\n";
  }
  {
    const std::string path = (fs::path(config.out_path) / "containment.csv").string();
    std::vector<std::vector<std::string>> rows;
    for (const ContainmentRow& r : run_containment_study(grid, config.level, draws, config.seed)) {
      rows.push_back({format_double(r.pi), format_double(r.sigma12), format_double(r.e_f),
                      format_double(r.level), format_double(r.frequency)});
    }
    io::write_csv(path, "ivsign-containment-v1",
                  {"pi", "sigma12", "e_f", "level", "frequency"}, rows);
    manifest_entry("containment", path, {{"draws", draws}, {"level", config.level}});
    out << "wrote " << path << "\n";
  }
  return 0;
}

MultiDesign design_from_config(const RunConfig& config, std::ostream& out) {
  MultiDesign design;
  if (!config.input_path.empty()) {
    // Calibrate the direction and instrument gram from data: posterior-mean
    // sign calibration on the negative orthant, then negation so the
    // canonical sign restriction holds.
    const IvDataset data =
        load_iv_csv(config.input_path, config.intercept, config.cluster_col);
    const PipelineResult pipe = run_pipeline(data);
    const Eigen::Index k = pipe.stats.k();
    Eigen::VectorXd se(k);
    for (Eigen::Index i = 0; i < k; ++i) {
      se[i] = std::sqrt(pipe.stats.sigma(k + i, k + i));
    }
    const Eigen::VectorXd calibrated = sign_calibrate(pipe.stats.xi2, se);
    design.pi_direction = -calibrated;
    design.z_gram = pipe.fit.z_gram;
    out << "calibrated direction from " << config.input_path << "\n";
  } else {
    design.pi_direction = Eigen::VectorXd::Ones(config.k);
    design.z_gram = Eigen::MatrixXd::Identity(config.k, config.k);
  }
  design.sigma_uv_values =
      config.sigma_uv_values.empty() ? std::vector<double>{0.5} : config.sigma_uv_values;

  if (!config.pi_norm_values.empty()) {
    design.pi_norm_values = config.pi_norm_values;
  } else {
    // Translate target mean F statistics into first-stage norms:
    // E[F] = 1 + |pi|^2 * (d'(Z'Z)d) / k for the unit direction d.
    std::vector<double> efs = config.ef_values.empty() ? std::vector<double>{3.0, 10.0, 30.0}
                                                       : config.ef_values;
    const Eigen::VectorXd d = design.pi_direction / design.pi_direction.norm();
    const double quad = d.dot(design.z_gram * d);
    const double k_eff = static_cast<double>(design.pi_direction.size());
    for (double ef : efs) {
      if (!(ef > 1.0)) {
        throw std::invalid_argument("target E[F] must exceed 1");
      }
      design.pi_norm_values.push_back(std::sqrt(k_eff * (ef - 1.0) / quad));
    }
  }
  return design;
}

nlohmann::json design_json(const MultiDesign& design) {
  return nlohmann::json{
      {"pi_direction", std::vector<double>(design.pi_direction.data(),
                                           design.pi_direction.data() + design.pi_direction.size())},
      {"pi_norm", design.pi_norm_values},
      {"sigma_uv", design.sigma_uv_values}};
}

int run_multi_command(const RunConfig& config, std::ostream& out, const char* command,
                      bool bound_focus) {
  MultiStudyConfig study;
  study.design = design_from_config(config, out);
  study.outer_draws = config.draws > 0 ? config.draws : 10000;
  study.s_draws = config.zeta_draws > 0 ? config.zeta_draws : 1000;
  study.c = config.c;
  study.seed = config.seed;
  study.with_bound = true;
  study.with_fixed_w = bound_focus;
  study.with_per_instrument = bound_focus;

  fs::create_directories(config.out_path);
  const std::string name = bound_focus ? "bound.csv" : "multi_mad.csv";
  const std::string path = (fs::path(config.out_path) / name).string();
  std::vector<std::vector<std::string>> rows;
  for (const MultiRow& r : run_multi_mad_study(study)) {
    rows.push_back({format_double(r.pi_norm), format_double(r.sigma_uv), format_double(r.e_f),
                    r.estimator, format_double(r.value), format_double(r.se)});
  }
  io::write_csv(path, bound_focus ? "ivsign-bound-v1" : "ivsign-multi-mad-v1",
                {"pi_norm", "sigma_uv", "e_f", "estimator", "value", "se"}, rows);

  nlohmann::json entry = {{"command", command},        {"table", bound_focus ? "bound" : "multi_mad"},
                          {"path", path},              {"seed", config.seed},
                          {"draws", study.outer_draws}, {"zeta_draws", study.s_draws},
                          {"c", study.c},              {"version", kVersion},
                          {"design", design_json(study.design)}};
  io::append_manifest_line((fs::path(config.out_path) / "manifest.jsonl").string(), entry);
  out << "wrote " << path << "\n";
  return 0;
}

}  // namespace

void RunConfig::validate() const {
  if (!(level > 0.0 && level < 1.0)) {
    throw std::invalid_argument("--level must lie in (0, 1)");
  }
  if (!(c >= 0.0 && c < 1.0)) {
    throw std::invalid_argument("--c must lie in [0, 1)");
  }
  if (draws < 0 || zeta_draws < 0) {
    throw std::invalid_argument("--draws and --zeta-draws must be positive");
  }
  if (nodes < 50) {
    throw std::invalid_argument("--nodes must be at least 50");
  }
  if (k < 1) {
    throw std::invalid_argument("--k must be at least 1");
  }
  if (command == Command::Estimate && input_path.empty()) {
    throw std::invalid_argument("estimate requires --input");
  }
  if (command != Command::Estimate && out_path.empty()) {
    throw std::invalid_argument("this command requires --out");
  }
  if (weight != "zgram" && weight != "gmm2" && weight.rfind("fixed:", 0) != 0) {
    throw std::invalid_argument("--weight must be zgram, gmm2, or fixed:w1,w2,...");
  }
  for (double p : pi_values) {
    if (!(p > 0.0)) throw std::invalid_argument("--pi values must be positive");
  }
  for (double s : sigma12_values) {
    if (!(s >= 0.0 && s < 1.0)) throw std::invalid_argument("--sigma12 values must lie in [0, 1)");
  }
  for (double s : sigma_uv_values) {
    if (!(std::fabs(s) < 1.0)) throw std::invalid_argument("--sigma-uv values must lie in (-1, 1)");
  }
  for (double p : pi_norm_values) {
    if (!(p > 0.0)) throw std::invalid_argument("--pi-norm values must be positive");
  }
}

int run_command(const RunConfig& config, std::ostream& out, std::ostream& err) {
  try {
    config.validate();
    switch (config.command) {
      case RunConfig::Command::Estimate:
        return cmd_estimate(config, out);
      case RunConfig::Command::Simulate:
        return cmd_simulate(config, out);
      case RunConfig::Command::Bound:
        return run_multi_command(config, out, "bound", /*bound_focus=*/true);
      case RunConfig::Command::Grid:
        return run_multi_command(config, out, "grid", /*bound_focus=*/false);
    }
    return 0;
  } catch (const CsvError& e) {
    err << "input error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const ConditioningError& e) {
    err << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const DegenerateWeightError& e) {
    err << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace ivsign
