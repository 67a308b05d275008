#include "flatlim/expcli.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "flatlim/errors.hpp"
#include "flatlim/lattice.hpp"
#include "flatlim/random.hpp"
#include "flatlim/spectral.hpp"

#ifndef FLATLIM_VERSION
#define FLATLIM_VERSION "unknown"
#endif

namespace flatlim {

namespace {

using nlohmann::json;

constexpr double nan_value = std::numeric_limits<double>::quiet_NaN();

NodeSet nodes_for(const ExperimentConfig& c, int trial = 0) {
  if (c.points) return NodeSet(*c.points, "explicit");
  GeometrySpec g = c.geometry;
  g.seed += static_cast<std::uint64_t>(trial);
  return make_geometry(g);
}

SamplingSet sampling_for(const ExperimentConfig& c, int N) {
  if (c.frequencies) return SamplingSet::from_list(*c.frequencies);
  return SamplingSet::full_grid(N, c.geometry.d, c.convention);
}

KernelSpec kernel_for(const ExperimentConfig& c, int N) {
  if (c.sinc) return KernelSpec::sinc();
  return KernelSpec::dirichlet(sampling_for(c, N), c.kernel_scale);
}

SpectralOptions spectral_options(const ExperimentConfig& c) {
  SpectralOptions o;
  o.rank_tol = c.rank_tol;
  return o;
}

double as_double(bool b) { return b ? 1.0 : 0.0; }

}  // namespace

void ResultTable::add_row(std::vector<double> row, bool row_failed) {
  rows.push_back(std::move(row));
  failed.push_back(row_failed);
}

bool ResultTable::rectangular() const {
  if (failed.size() != rows.size()) return false;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != columns.size()) return false;
    if (!failed[i])
      for (double v : rows[i])
        if (std::isnan(v)) return false;
  }
  return true;
}

void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(jobs, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr first;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i; !stop && (i = next++) < count;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!first) first = std::current_exception();
          stop = true;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first) std::rethrow_exception(first);
}

CommandResult cmd_rank_profile(const ExperimentConfig& cfg, const RunOptions& run) {
  CommandResult out;
  out.table.columns = {"trial", "k", "r_k", "t_k", "m", "tolerance"};
  const int trials = cfg.geometry_trials;
  std::vector<RankProfile> profiles(static_cast<std::size_t>(trials));
  parallel_for(profiles.size(), run.jobs, [&](std::size_t t) {
    profiles[t] = rank_profile(nodes_for(cfg, static_cast<int>(t)), cfg.rank_tol);
  });
  for (int t = 0; t < trials; ++t) {
    const auto& p = profiles[static_cast<std::size_t>(t)];
    for (std::size_t k = 0; k < p.ranks.size(); ++k)
      out.table.add_row({double(t), double(k), double(p.ranks[k]), double(p.increments[k]),
                         double(p.moment_order), p.rank_tolerance});
  }
  return out;
}

CommandResult cmd_kernel_eigs(const ExperimentConfig& cfg, const RunOptions& run) {
  CommandResult out;
  const NodeSet nodes = nodes_for(cfg);
  const KernelSpec spec = kernel_for(cfg, cfg.N.front());
  const auto opts = spectral_options(cfg);
  const auto grid = cfg.sweep.values();
  const int n = nodes.size();

  out.table.columns = {"eps"};
  for (int i = 1; i <= n; ++i) out.table.columns.push_back("lambda_" + std::to_string(i));
  out.table.columns.push_back("underflow");

  std::vector<std::vector<double>> rows(grid.size());
  parallel_for(grid.size(), run.jobs, [&](std::size_t i) {
    const auto ev = eigenvalues_sym(kernel_matrix_wide(spec, nodes, wide(grid[i])));
    const wide floor = wide(opts.underflow_factor * spec.working_epsilon()) * ev.front();
    std::vector<double> row{grid[i]};
    for (const auto& v : ev) row.push_back(to_double(v));
    row.push_back(as_double(ev.back() < floor));
    rows[i] = std::move(row);
  });
  for (auto& r : rows) out.table.add_row(std::move(r));

  try {
    const auto rep = fit_scaling(spec, nodes, grid, opts);
    ResultTable s;
    s.columns = {"group", "predicted_exponent", "count", "fitted_slope", "slope_stderr", "r2"};
    for (std::size_t k = 0; k < rep.groups.size(); ++k) {
      const auto& g = rep.groups[k];
      s.add_row({double(k), double(g.predicted_exponent), double(g.count), g.fitted_slope, g.slope_stderr, g.fit_r2});
    }
    out.summary = std::move(s);
    out.warnings = rep.warnings;
  } catch (const numerical_error& e) {
    out.exit_code = 3;
    out.error = e.what();
  }
  return out;
}

CommandResult cmd_tightness(const ExperimentConfig& cfg, const RunOptions& run) {
  CommandResult out;
  const NodeSet nodes = nodes_for(cfg);
  const auto opts = spectral_options(cfg);
  const auto profile = rank_profile(nodes, cfg.rank_tol);
  const int m = profile.moment_order;
  const int d = nodes.dim();
  const bool grid_n = !cfg.frequencies && !cfg.sinc;
  std::vector<int> Ns = grid_n ? cfg.N : std::vector<int>{0};

  out.table.columns = {"N", "n", "m", "C", "imag_residue", "r_tilde_rank", "rank_condition"};
  if (cfg.det_fit)
    for (const char* c : {"predicted_det_exponent", "fitted_det_exponent", "det_r2"}) out.table.columns.push_back(c);
  out.table.columns.push_back("failed");

  std::vector<std::vector<double>> rows(Ns.size());
  std::vector<std::string> errors(Ns.size());
  parallel_for(Ns.size(), run.jobs, [&](std::size_t i) {
    const int N = Ns[i];
    std::vector<double> row{double(N), double(nodes.size()), double(m)};
    try {
      const KernelSpec spec = kernel_for(cfg, N);
      WronskianMatrix w;
      switch (cfg.wronskian) {
        case WronskianKind::dirichlet: w = wronskian_dirichlet(sampling_for(cfg, N), m); break;
        case WronskianKind::limit_gram: w = wronskian_limit_gram(m, d); break;
        case WronskianKind::finite_difference: w = wronskian_finite_difference(spec, m, d, cfg.fd_step); break;
      }
      const auto cert = tightness_constant(nodes, w, opts);
      // -1: the sinc kernel has no sampling set to check
      const double rank_ok =
          cfg.sinc ? -1.0 : as_double(rank_condition_check(sampling_for(cfg, N), m, nodes.size(), cfg.rank_tol));
      for (double v : {cert.constant_C, cert.imag_residue, double(cert.r_tilde_rank), rank_ok}) row.push_back(v);
      if (cfg.det_fit) {
        const auto det = det_scaling_check(spec, nodes, cfg.sweep.values(), opts);
        for (double v : {double(det.predicted_exponent), det.fitted_exponent, det.fit_r2}) row.push_back(v);
      }
      row.push_back(0.0);
    } catch (const numerical_error& e) {
      errors[i] = e.what();
      row.resize(out.table.columns.size() - 1, nan_value);
      row.push_back(1.0);
    }
    rows[i] = std::move(row);
  });
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const bool bad = !errors[i].empty();
    out.table.add_row(std::move(rows[i]), bad);
    if (bad) {
      out.warnings.push_back("N=" + std::to_string(Ns[i]) + ": " + errors[i]);
      out.exit_code = 3;
      if (out.error.empty()) out.error = errors[i];
    }
  }
  return out;
}

CommandResult cmd_lattice(const ExperimentConfig& cfg, const RunOptions& run) {
  CommandResult out;
  out.table.columns = {"n", "d", "points", "expected_points", "gc", "abs_det", "log_abs_det",
                       "max_rel_residual", "max_formula_gap"};
  std::vector<std::pair<int, int>> cases;
  for (int n = 1; n <= cfg.lattice_n_max; ++n)
    for (int d = 1; d <= cfg.lattice_d_max; ++d) cases.emplace_back(n, d);

  std::vector<std::vector<double>> rows(cases.size());
  parallel_for(cases.size(), run.jobs, [&](std::size_t i) {
    const auto [n, d] = cases[i];
    const auto lat = principal_lattice(n, d);
    const auto wit = gc_witness_scaled_lattice(n, d);
    const bool gc = verify_gc(lat.nodes, wit);
    const auto det = lattice_vandermonde_det(n, d);
    const IndexSet idx = enumerate_indices(d, n, IndexSetKind::total_degree);
    const Eigen::MatrixXd at_nodes = build_vandermonde(lat.nodes.points(), idx);

    Rng rng(split_seed(cfg.seed, i));
    double worst = 0.0, gap = 0.0;
    for (int p = 0; p < cfg.lattice_polynomials; ++p) {
      Eigen::VectorXd coef(static_cast<Eigen::Index>(idx.size()));
      for (Eigen::Index j = 0; j < coef.size(); ++j) coef(j) = rng.uniform(-1.0, 1.0);
      const Eigen::VectorXd vals = at_nodes * coef;
      const std::vector<double> v(vals.data(), vals.data() + vals.size());
      Eigen::MatrixXd q(cfg.lattice_queries, d);
      for (Eigen::Index r = 0; r < q.rows(); ++r)
        for (int c = 0; c < d; ++c) q(r, c) = rng.uniform(0.0, n);
      const Eigen::VectorXd exact = build_vandermonde(q, idx) * coef;
      double err = 0.0;
      for (Eigen::Index r = 0; r < q.rows(); ++r) {
        const Eigen::VectorXd x = q.row(r).transpose();
        const double a = interpolate_gc(lat.nodes, wit, v, x);
        const double b = interpolate_scaled_lattice(n, d, v, x);
        err = std::max(err, std::abs(a - exact(r)));
        gap = std::max(gap, std::abs(a - b));
      }
      const double scale = std::max({exact.lpNorm<Eigen::Infinity>(), vals.lpNorm<Eigen::Infinity>(), 1e-300});
      worst = std::max(worst, err / scale);
    }
    rows[i] = {double(n), double(d), double(lat.nodes.size()), double(total_degree_count(d, n)), as_double(gc),
               det.abs_det, det.log_abs_det, worst, gap};
  });
  for (auto& r : rows) out.table.add_row(std::move(r));
  return out;
}

CommandResult cmd_superres(const ExperimentConfig& cfg, const RunOptions& run) {
  CommandResult out;
  const bool esprit = cfg.kind == ExperimentKind::superres_esprit;
  const NodeSet geometry = nodes_for(cfg);
  const int n = geometry.size();
  const auto deltas = cfg.sweep.values();
  const SamplingSet grid = SamplingSet::full_grid(cfg.N.front(), geometry.dim(), cfg.convention);
  const bool extended = esprit && cfg.esprit.extended_precision;
  const std::size_t trials = static_cast<std::size_t>(cfg.trials);

  out.table.columns = {"Delta", "trial", "kappa", "converged", "iters", "max_node_error", "failed"};
  const std::size_t jobs = deltas.size() * trials;
  std::vector<std::vector<double>> rows(jobs);
  std::vector<std::string> errors(jobs);
  parallel_for(jobs, run.jobs, [&](std::size_t j) {
    const double delta = deltas[j / trials];
    // One noise stream per trial, shared by every Delta of the sweep.
    const std::uint64_t seed = split_seed(cfg.seed, j % trials);
    Eigen::VectorXcd amp = Eigen::VectorXcd::Ones(n);
    if (cfg.random_phase) {
      Rng rng(split_seed(seed, 1));
      const double two_pi = 2.0 * std::acos(-1.0);
      for (int i = 0; i < n; ++i) amp(i) = std::polar(1.0, two_pi * rng.uniform01());
    }
    const SpikeSignal truth(geometry.points() * delta, amp);
    std::vector<double> row{delta, double(j % trials)};
    try {
      const auto meas = fourier_measurements(truth, grid, cfg.noise, seed, extended);
      RecoveryResult r;
      if (esprit) {
        r = esprit_2d(meas, n, cfg.esprit, &truth);
      } else {
        SpikeSignal init = truth;
        init.nodes.array() += cfg.init_offset;
        r = nls_recover(meas, n, init, cfg.nls, &truth);
      }
      row.insert(row.end(), {r.kappa, as_double(r.converged), double(r.iterations), r.max_node_error, 0.0});
    } catch (const std::exception& e) {
      errors[j] = e.what();
      row.insert(row.end(), {nan_value, 0.0, 0.0, nan_value, 1.0});
    }
    rows[j] = std::move(row);
  });

  std::vector<double> xs, ys;
  int failed = 0;
  for (std::size_t j = 0; j < jobs; ++j) {
    const bool bad = !errors[j].empty();
    if (bad) {
      ++failed;
      std::ostringstream msg;
      msg << "Delta=" << format_number(rows[j][0]) << " trial " << j % trials << ": " << errors[j];
      out.warnings.push_back(msg.str());
    } else if (rows[j][2] > 0.0 && std::isfinite(rows[j][2])) {
      xs.push_back(rows[j][0]);
      ys.push_back(rows[j][2]);
    }
    out.table.add_row(std::move(rows[j]), bad);
  }
  if (xs.size() < 4) {
    out.exit_code = 3;
    out.error = "fewer than 4 usable rows for the kappa slope fit";
    return out;
  }
  const auto f = slope_fit(xs, ys);
  ResultTable s;
  s.columns = {"slope", "growth_exponent", "intercept", "slope_stderr", "r2", "points", "failed_rows"};
  s.add_row({f.slope, -f.slope, f.intercept, f.slope_stderr, f.r_squared, double(f.points), double(failed)});
  out.summary = std::move(s);
  return out;
}

CommandResult run_experiment(const ExperimentConfig& cfg, const RunOptions& run) {
  const auto t0 = std::chrono::steady_clock::now();
  CommandResult out;
  switch (cfg.kind) {
    case ExperimentKind::rank_profile: out = cmd_rank_profile(cfg, run); break;
    case ExperimentKind::kernel_eigs: out = cmd_kernel_eigs(cfg, run); break;
    case ExperimentKind::tightness: out = cmd_tightness(cfg, run); break;
    case ExperimentKind::lattice: out = cmd_lattice(cfg, run); break;
    case ExperimentKind::superres_nls:
    case ExperimentKind::superres_esprit: out = cmd_superres(cfg, run); break;
  }
  out.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.config_hash = config_hash(cfg);
  out.version = FLATLIM_VERSION;
  out.kind = to_string(cfg.kind);
  return out;
}

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string to_csv(const ResultTable& t) {
  std::string s;
  for (std::size_t c = 0; c < t.columns.size(); ++c) {
    if (c) s += ',';
    s += t.columns[c];
  }
  s += '\n';
  for (const auto& row : t.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) s += ',';
      s += format_number(row[c]);
    }
    s += '\n';
  }
  return s;
}

json sidecar_json(const CommandResult& r, const ExperimentConfig& cfg) {
  json j;
  j["experiment"] = r.kind;
  j["config_hash"] = r.config_hash;
  j["version"] = r.version;
  j["wall_time_s"] = r.wall_time_s;
  j["config"] = to_json(cfg);
  j["columns"] = r.table.columns;
  j["rows"] = r.table.rows.size();
  j["failed_rows"] = std::count(r.table.failed.begin(), r.table.failed.end(), true);
  j["warnings"] = r.warnings;
  j["exit_code"] = r.exit_code;
  if (!r.error.empty()) j["error"] = r.error;
  if (r.summary) {
    json rows = json::array();
    for (const auto& row : r.summary->rows) {
      json o;
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (std::isfinite(row[c]))
          o[r.summary->columns[c]] = row[c];
        else
          o[r.summary->columns[c]] = format_number(row[c]);
      }
      rows.push_back(std::move(o));
    }
    j["summary"] = std::move(rows);
  }
  return j;
}

OutputPaths output_paths(const std::string& out) {
  std::string stem = out;
  if (stem.size() > 4 && stem.compare(stem.size() - 4, 4, ".csv") == 0) stem.resize(stem.size() - 4);
  return {stem + ".csv", stem + ".summary.csv", stem + ".json"};
}

namespace {

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << bytes;
  if (!f) throw std::runtime_error("write failed: " + path);
}

}  // namespace

void write_outputs(const CommandResult& r, const ExperimentConfig& cfg, const std::string& out) {
  const auto p = output_paths(out);
  write_file(p.csv, to_csv(r.table));
  if (r.summary) write_file(p.summary, to_csv(*r.summary));
  json side = sidecar_json(r, cfg);
  side["outputs"] = {{"csv", p.csv}};
  if (r.summary) side["outputs"]["summary"] = p.summary;
  write_file(p.sidecar, side.dump(2) + "\n");
}

}  // namespace flatlim
