#ifndef IVSIGN_CLI_HPP
#define IVSIGN_CLI_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace ivsign {

/// Parsed command-line request. Numeric fields left at 0 pick per-command
/// defaults; validate() rejects invalid combinations before any computation.
struct RunConfig {
  enum class Command { Estimate, Simulate, Bound, Grid };

  Command command = Command::Estimate;
  std::string input_path;
  std::uint64_t seed = 20240817ULL;
  std::int64_t draws = 0;       // Monte Carlo draws per design point
  std::int64_t zeta_draws = 0;  // S, the zeta-draw count of the RB average
  double c = 0.5;
  std::string weight = "zgram";  // zgram | gmm2 | fixed:w1,w2,...
  double level = 0.95;
  std::string cluster_col;
  bool intercept = true;
  std::string out_path;

  // Study grid overrides (empty = module defaults).
  std::vector<double> pi_values;
  std::vector<double> sigma12_values;
  std::vector<double> pi_norm_values;
  std::vector<double> sigma_uv_values;
  std::vector<double> ef_values;  // alternative to pi_norm: target E[F]
  int k = 3;
  int nodes = 200;

  void validate() const;
};

/// Executes one command. Returns the process exit status: 0 success,
/// 2 input/usage error, 3 numerical or conditioning error.
int run_command(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Version string recorded in manifests and reports.
extern const char* const kVersion;

}  // namespace ivsign

#endif  // IVSIGN_CLI_HPP
