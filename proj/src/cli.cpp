#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "flatlim/errors.hpp"
#include "flatlim/expcli.hpp"

namespace flatlim {

namespace {

struct CommonArgs {
  std::string config;
  std::string out;
  int jobs = 1;
  std::optional<std::uint64_t> seed;
};

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) return {};
  std::stringstream buf;
  buf << f.rdbuf();
  return buf.str();
}

ExperimentConfig prepare(const CommonArgs& a, const std::string& command) {
  ExperimentConfig cfg = load_config(a.config);
  if (command != "verify" && to_string(cfg.kind) != command)
    throw config_error("config declares experiment '" + to_string(cfg.kind) + "' but the subcommand is '" +
                       command + "'");
  if (a.seed) cfg.seed = *a.seed;
  return cfg;
}

int run_command(const CommonArgs& a, const std::string& command) {
  const ExperimentConfig cfg = prepare(a, command);
  const std::string out = a.out.empty() ? cfg.output : a.out;
  if (!out.empty()) {
    const auto p = output_paths(out);
    for (const auto& target : {p.csv, p.summary, p.sidecar}) {
      std::error_code ec;
      if (std::filesystem::equivalent(target, a.config, ec))
        throw config_error("output " + target + " would overwrite the config file");
    }
  }
  const CommandResult r = run_experiment(cfg, {a.jobs});
  if (out.empty()) {
    std::cout << to_csv(r.table);
    if (r.summary) std::cerr << to_csv(*r.summary);
  } else {
    write_outputs(r, cfg, out);
    std::cerr << "wrote " << output_paths(out).csv << " (" << r.table.rows.size() << " rows, "
              << r.wall_time_s << " s)\n";
  }
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
  if (r.exit_code != 0) std::cerr << "numerical failure: " << r.error << "\n";
  return r.exit_code;
}

// Re-runs a recorded experiment and compares hash and bytes.
int run_verify(const CommonArgs& a) {
  const ExperimentConfig cfg = prepare(a, "verify");
  const std::string out = a.out.empty() ? cfg.output : a.out;
  if (out.empty()) throw config_error("verify needs --out or an output path in the config");
  const auto paths = output_paths(out);
  const std::string side = read_file(paths.sidecar);
  if (side.empty()) {
    std::cerr << "no sidecar at " << paths.sidecar << "\n";
    return 4;
  }
  const auto recorded = nlohmann::json::parse(side, nullptr, false);
  const std::string want = recorded.is_object() ? recorded.value("config_hash", "") : "";
  const std::string have = config_hash(cfg);
  if (want != have) {
    std::cerr << "config hash mismatch: recorded " << want << ", config gives " << have << "\n";
    return 4;
  }
  const CommandResult r = run_experiment(cfg, {a.jobs});
  bool same = to_csv(r.table) == read_file(paths.csv);
  if (r.summary) same = same && to_csv(*r.summary) == read_file(paths.summary);
  if (!same) {
    std::cerr << "replay differs from " << paths.csv << "\n";
    return 4;
  }
  std::cerr << "replay matches " << paths.csv << " (hash " << have << ")\n";
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Flat-limit kernel and super-resolution experiments"};
  app.require_subcommand(1);
  CommonArgs args;
  const unsigned hw = std::thread::hardware_concurrency();
  args.jobs = hw == 0 ? 1 : static_cast<int>(hw);

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"rank-profile", "rank profile r_k, t_k and moment order m of a node set"},
      {"kernel-eigs", "kernel spectra over an eps sweep with fitted group slopes"},
      {"tightness", "tightness constant det(R W R^T), rank diagnostics and det exponent"},
      {"lattice", "principal lattices: GC verdicts, determinants, interpolation residuals"},
      {"superres-nls", "NLS recovery over a Delta sweep with the fitted kappa slope"},
      {"superres-esprit", "2-D ESPRIT recovery over a Delta sweep with the fitted kappa slope"},
      {"verify", "re-run a recorded experiment and compare config hash and output bytes"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", args.config, "experiment JSON")->required();
    sub->add_option("--out", args.out, "output CSV path (sidecar JSON next to it)");
    sub->add_option("--jobs", args.jobs, "worker threads")->check(CLI::PositiveNumber)->capture_default_str();
    sub->add_option("--seed", args.seed, "overrides the config seed");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    if (command == "verify") return run_verify(args);
    return run_command(args, command);
  } catch (const config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const numerical_error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace flatlim
