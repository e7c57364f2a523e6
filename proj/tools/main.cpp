#include <iostream>

#include <CLI11.hpp>

#include "ivsign/cli.hpp"

namespace {

void add_common(CLI::App* cmd, ivsign::RunConfig& config) {
  cmd->add_option("--seed", config.seed, "RNG seed");
  cmd->add_option("--draws", config.draws, "Monte Carlo draws per design point");
  cmd->add_option("--zeta-draws", config.zeta_draws,
                  "zeta draws S of the Rao-Blackwellized average");
  cmd->add_option("--c", config.c, "robustness parameter of the instrument recombination");
  cmd->add_option("--weight", config.weight, "weight scheme: zgram | gmm2 | fixed:w1,w2,...");
  cmd->add_option("--level", config.level, "confidence level");
  cmd->add_option("--out", config.out_path, "output file (estimate) or directory (studies)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-sample unbiased instrumental-variables estimation under a known "
               "first-stage sign"};
  app.require_subcommand(1);

  ivsign::RunConfig config;

  CLI::App* estimate = app.add_subcommand(
      "estimate", "estimate from a CSV dataset (columns y, x, z1..zk[, w1..wp][, cluster])");
  estimate->add_option("--input", config.input_path, "input CSV path")->required();
  estimate->add_option("--cluster-col", config.cluster_col,
                       "name of the cluster id column (enables clustered vcov)");
  estimate->add_flag("!--no-intercept", config.intercept,
                     "do not add an intercept to the controls");
  add_common(estimate, config);

  CLI::App* simulate = app.add_subcommand(
      "simulate", "single-instrument studies: bias, deviation quantiles, dominance, containment");
  simulate->add_option("--pi", config.pi_values, "first-stage grid values")->delimiter(',');
  simulate->add_option("--sigma12", config.sigma12_values, "reduced-form correlation grid values")
      ->delimiter(',');
  simulate->add_option("--nodes", config.nodes, "quadrature nodes per dimension");
  add_common(simulate, config);

  CLI::App* bound = app.add_subcommand(
      "bound", "lower bound on the risk of unbiased estimators over a multi-instrument design");
  CLI::App* grid = app.add_subcommand(
      "grid", "multi-instrument mean-absolute-deviation comparison over a design grid");
  for (CLI::App* cmd : {bound, grid}) {
    cmd->add_option("--input", config.input_path,
                    "CSV dataset used to calibrate the first-stage direction and Z'Z");
    cmd->add_option("--cluster-col", config.cluster_col, "cluster id column of --input");
    cmd->add_flag("!--no-intercept", config.intercept,
                  "do not add an intercept to the controls of --input");
    cmd->add_option("--k", config.k, "number of instruments of the synthetic design");
    cmd->add_option("--pi-norm", config.pi_norm_values, "first-stage norms")->delimiter(',');
    cmd->add_option("--ef", config.ef_values, "target mean first-stage F values")->delimiter(',');
    cmd->add_option("--sigma-uv", config.sigma_uv_values, "error correlations")->delimiter(',');
    add_common(cmd, config);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (estimate->parsed()) {
    config.command = ivsign::RunConfig::Command::Estimate;
  } else if (simulate->parsed()) {
    config.command = ivsign::RunConfig::Command::Simulate;
  } else if (bound->parsed()) {
    config.command = ivsign::RunConfig::Command::Bound;
  } else {
    config.command = ivsign::RunConfig::Command::Grid;
  }
  return ivsign::run_command(config, std::cout, std::cerr);
}
