#pragma once

// Experiment runner: JSON configs, the per-experiment commands, CSV and
// sidecar JSON output, and the command-line front end.

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "flatlim/geometry.hpp"
#include "flatlim/kernels.hpp"
#include "flatlim/superres.hpp"

namespace flatlim {

class config_error : public std::runtime_error {
 public:
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

enum class ExperimentKind { rank_profile, kernel_eigs, tightness, lattice, superres_nls, superres_esprit };

std::string to_string(ExperimentKind k);
ExperimentKind experiment_kind_from_string(const std::string& s);

struct SweepSpec {
  double start = 0.1;
  double stop = 1e-3;
  int points = 20;
  bool log = true;
  std::vector<double> values() const;
};

enum class WronskianKind { dirichlet, limit_gram, finite_difference };

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::rank_profile;
  std::uint64_t seed = 1;
  std::string output;
  std::optional<double> rank_tol;

  GeometrySpec geometry;
  std::optional<Eigen::MatrixXd> points;  // explicit nodes replace the generator
  int geometry_trials = 1;                // consecutive geometry seeds

  bool sinc = false;
  std::vector<int> N{3};
  GridConvention convention = GridConvention::closed;
  double kernel_scale = 1.0;
  std::optional<Eigen::MatrixXd> frequencies;  // explicit sampling set

  SweepSpec sweep;

  WronskianKind wronskian = WronskianKind::dirichlet;
  double fd_step = 1e-3;
  bool det_fit = true;

  int lattice_n_max = 4;
  int lattice_d_max = 3;
  int lattice_polynomials = 50;
  int lattice_queries = 20;

  double noise = 1e-10;
  int trials = 1;
  bool random_phase = false;
  double init_offset = 0.0;
  NlsOptions nls;
  EspritParams esprit;
};

// The shipped JSON schema all configs are validated against.
const nlohmann::json& config_schema();

// Error messages for every schema violation (empty when valid). Supports
// type, enum, properties, required, additionalProperties, items, minItems,
// maxItems, minimum, maximum and exclusiveMinimum.
std::vector<std::string> schema_violations(const nlohmann::json& doc, const nlohmann::json& schema);

// Schema check, then semantic checks; throws config_error. Missing fields
// take per-experiment defaults.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::string& path);

// Canonical form with every default filled in; stable across runs.
nlohmann::json to_json(const ExperimentConfig& cfg);

std::uint64_t fnv1a64(std::string_view bytes);
// 16 hex digits of FNV-1a over the canonical JSON dump, output path excluded.
std::string config_hash(const ExperimentConfig& cfg);

struct ResultTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::vector<bool> failed;  // per row

  void add_row(std::vector<double> row, bool row_failed = false);
  bool rectangular() const;
};

struct CommandResult {
  ResultTable table;
  std::optional<ResultTable> summary;
  std::vector<std::string> warnings;
  int exit_code = 0;  // 0 success, 3 numerical failure
  std::string error;
  std::string config_hash;
  std::string version;
  double wall_time_s = 0.0;
  std::string kind;
};

struct RunOptions {
  int jobs = 1;
};

// Calls fn(0..count-1) on up to jobs threads; the first exception is
// rethrown after all workers finish.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn);

CommandResult cmd_rank_profile(const ExperimentConfig& cfg, const RunOptions& run = {});
CommandResult cmd_kernel_eigs(const ExperimentConfig& cfg, const RunOptions& run = {});
CommandResult cmd_tightness(const ExperimentConfig& cfg, const RunOptions& run = {});
CommandResult cmd_lattice(const ExperimentConfig& cfg, const RunOptions& run = {});
CommandResult cmd_superres(const ExperimentConfig& cfg, const RunOptions& run = {});
CommandResult run_experiment(const ExperimentConfig& cfg, const RunOptions& run = {});

// Shortest round-trip decimal; "nan", "inf", "-inf" for non-finite values.
std::string format_number(double x);
std::string to_csv(const ResultTable& t);
nlohmann::json sidecar_json(const CommandResult& r, const ExperimentConfig& cfg);

struct OutputPaths {
  std::string csv, summary, sidecar;
};
// x.csv -> x.csv, x.summary.csv, x.json
OutputPaths output_paths(const std::string& out);
void write_outputs(const CommandResult& r, const ExperimentConfig& cfg, const std::string& out);

// Front end; returns the process exit code (0 ok, 1 usage, 2 config error,
// 3 numerical failure, 4 replay mismatch).
int run_cli(int argc, const char* const* argv);

}  // namespace flatlim
