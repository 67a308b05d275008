#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "flatlim/expcli.hpp"
#include "flatlim/spectral.hpp"

namespace flatlim {

extern const char* const config_schema_text;

namespace {

using nlohmann::json;

const json& section(const json& doc, const char* key) {
  static const json empty = json::object();
  return doc.contains(key) ? doc[key] : empty;
}

template <class T>
T get_or(const json& obj, const char* key, T fallback) {
  return obj.contains(key) ? obj[key].get<T>() : fallback;
}

Eigen::MatrixXd matrix_from(const json& rows, const char* what) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto d = static_cast<Eigen::Index>(rows[0].size());
  Eigen::MatrixXd m(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (static_cast<Eigen::Index>(rows[i].size()) != d)
      throw config_error(std::string(what) + ": rows must all have the same length");
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = rows[i][j].get<double>();
  }
  return m;
}

json matrix_to(const Eigen::MatrixXd& m, bool integral) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (integral)
        r.push_back(static_cast<long long>(std::llround(m(i, j))));
      else
        r.push_back(m(i, j));
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

bool is_superres(ExperimentKind k) {
  return k == ExperimentKind::superres_nls || k == ExperimentKind::superres_esprit;
}

}  // namespace

const json& config_schema() {
  static const json schema = json::parse(config_schema_text);
  return schema;
}

std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::rank_profile: return "rank-profile";
    case ExperimentKind::kernel_eigs: return "kernel-eigs";
    case ExperimentKind::tightness: return "tightness";
    case ExperimentKind::lattice: return "lattice";
    case ExperimentKind::superres_nls: return "superres-nls";
    case ExperimentKind::superres_esprit: return "superres-esprit";
  }
  return "rank-profile";
}

ExperimentKind experiment_kind_from_string(const std::string& s) {
  for (auto k : {ExperimentKind::rank_profile, ExperimentKind::kernel_eigs, ExperimentKind::tightness,
                 ExperimentKind::lattice, ExperimentKind::superres_nls, ExperimentKind::superres_esprit})
    if (to_string(k) == s) return k;
  throw config_error("unknown experiment: " + s);
}

std::vector<double> SweepSpec::values() const {
  if (log) {
    if (start == stop) throw config_error("sweep: start and stop coincide");
    return geometric_grid(std::max(start, stop), std::min(start, stop), points);
  }
  std::vector<double> v(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) v[static_cast<std::size_t>(i)] = start + (stop - start) * i / (points - 1);
  return v;
}

ExperimentConfig parse_config(const json& doc) {
  const auto errs = schema_violations(doc, config_schema());
  if (!errs.empty()) {
    std::string msg = "config does not match the schema:";
    for (const auto& e : errs) msg += "\n  " + e;
    throw config_error(msg);
  }

  ExperimentConfig c;
  c.kind = experiment_kind_from_string(doc["experiment"].get<std::string>());
  const bool sr = is_superres(c.kind);
  c.seed = get_or<std::uint64_t>(doc, "seed", 1);
  c.output = get_or<std::string>(doc, "output", "");
  if (doc.contains("rank_tol")) c.rank_tol = doc["rank_tol"].get<double>();

  const json& g = section(doc, "geometry");
  c.geometry.kind = geometry_kind_from_string(get_or<std::string>(g, "kind", "random"));
  c.geometry.n = get_or(g, "n", 6);
  c.geometry.d = get_or(g, "d", 2);
  if (g.contains("coefficient")) c.geometry.coefficient = g["coefficient"].get<double>();
  c.geometry.seed = get_or<std::uint64_t>(g, "seed", 1);
  c.geometry.scaling = geometry_scaling_from_string(get_or<std::string>(g, "scaling", sr ? "separation" : "extent"));
  c.geometry_trials = get_or(g, "trials", 1);
  if (g.contains("points")) {
    c.points = matrix_from(g["points"], "geometry.points");
    c.geometry.n = static_cast<int>(c.points->rows());
    c.geometry.d = static_cast<int>(c.points->cols());
    if (!NodeSet(*c.points).pairwise_distinct()) throw config_error("geometry.points: nodes coincide");
  } else {
    try {
      make_geometry(c.geometry);
    } catch (const std::invalid_argument& e) {
      throw config_error(std::string("geometry: ") + e.what());
    }
  }
  if (c.geometry_trials > 1 && (c.points || c.geometry.kind != GeometryKind::random))
    throw config_error("geometry.trials > 1 needs a generated random geometry");

  const json& k = section(doc, "kernel");
  c.sinc = get_or<std::string>(k, "type", "dirichlet") == "sinc";
  if (k.contains("N")) {
    c.N = k["N"].is_array() ? k["N"].get<std::vector<int>>() : std::vector<int>{k["N"].get<int>()};
  } else {
    c.N = {sr ? 20 : 3};
  }
  c.convention = get_or<std::string>(k, "convention", c.kind == ExperimentKind::superres_nls ? "open" : "closed") == "open"
                     ? GridConvention::open
                     : GridConvention::closed;
  c.kernel_scale = get_or(k, "scale", 1.0);
  if (k.contains("frequencies")) {
    c.frequencies = matrix_from(k["frequencies"], "kernel.frequencies");
    if (c.frequencies->cols() != c.geometry.d)
      throw config_error("kernel.frequencies: dimension differs from the geometry");
    try {
      SamplingSet::from_list(*c.frequencies);
    } catch (const std::invalid_argument& e) {
      throw config_error(std::string("kernel.frequencies: ") + e.what());
    }
  }
  if (c.N.size() > 1 && c.kind != ExperimentKind::tightness)
    throw config_error("kernel.N: a list of N is only accepted by tightness");
  if (c.frequencies && sr) throw config_error("kernel.frequencies: super-resolution needs a full grid");

  const json& s = section(doc, "sweep");
  c.sweep.start = get_or(s, "start", sr ? 0.02 : 0.1);
  c.sweep.stop = get_or(s, "stop", sr ? 0.002 : 1e-3);
  c.sweep.points = get_or(s, "points", sr ? 8 : 20);
  c.sweep.log = get_or(s, "log", true);
  if (c.kind == ExperimentKind::kernel_eigs || c.kind == ExperimentKind::tightness) {
    if (!(c.sweep.start > c.sweep.stop)) throw config_error("sweep: eps must decrease from start to stop");
    if (c.sweep.points < 5) throw config_error("sweep: at least 5 eps values are needed");
  }
  if (sr && c.sweep.points < 4) throw config_error("sweep: at least 4 Delta values are needed");

  const json& t = section(doc, "tightness");
  const std::string w = get_or<std::string>(t, "wronskian", "dirichlet");
  c.wronskian = w == "limit-gram" ? WronskianKind::limit_gram
                : w == "finite-difference" ? WronskianKind::finite_difference
                                           : WronskianKind::dirichlet;
  c.fd_step = get_or(t, "fd_step", 1e-3);
  c.det_fit = get_or(t, "det_fit", true);
  if (c.kind == ExperimentKind::tightness && c.wronskian == WronskianKind::limit_gram && c.frequencies)
    throw config_error("tightness: limit-gram Wronskian needs full grids");
  if (c.kind == ExperimentKind::tightness && c.sinc && c.wronskian == WronskianKind::dirichlet)
    throw config_error("tightness: the sinc kernel has no sampling set; use limit-gram or finite-difference");

  const json& l = section(doc, "lattice");
  c.lattice_n_max = get_or(l, "n_max", 4);
  c.lattice_d_max = get_or(l, "d_max", 3);
  c.lattice_polynomials = get_or(l, "polynomials", 50);
  c.lattice_queries = get_or(l, "queries", 20);

  const json& r = section(doc, "superres");
  c.noise = get_or(r, "noise", c.kind == ExperimentKind::superres_esprit ? 1e-20 : 1e-10);
  c.trials = get_or(r, "trials", 1);
  c.random_phase = get_or<std::string>(r, "amplitudes", "ones") == "random-phase";
  c.init_offset = get_or(r, "init_offset", 0.0);
  const json& nls = section(r, "nls");
  c.nls.max_iters = get_or(nls, "max_iters", c.nls.max_iters);
  c.nls.gradient_tol = get_or(nls, "gradient_tol", c.nls.gradient_tol);
  c.nls.step_tol = get_or(nls, "step_tol", c.nls.step_tol);
  c.nls.polish_steps = get_or(nls, "polish_steps", c.nls.polish_steps);
  const json& es = section(r, "esprit");
  c.esprit.M1 = get_or(es, "M1", c.esprit.M1);
  c.esprit.M2 = get_or(es, "M2", c.esprit.M2);
  c.esprit.L1 = get_or(es, "L1", c.esprit.L1);
  c.esprit.L2 = get_or(es, "L2", c.esprit.L2);
  c.esprit.beta1 = get_or(es, "beta1", c.esprit.beta1);
  c.esprit.beta2 = get_or(es, "beta2", c.esprit.beta2);
  c.esprit.extended_precision = get_or(es, "extended_precision", true);
  if (c.kind == ExperimentKind::superres_esprit) {
    if (c.geometry.d != 2) throw config_error("superres-esprit: geometry must be two-dimensional");
    const int side = c.convention == GridConvention::closed ? 2 * c.N[0] + 1 : 2 * c.N[0] - 1;
    if (c.esprit.M1 > side || c.esprit.M2 > side) throw config_error("superres.esprit: M1, M2 exceed the grid");
    const auto& e = c.esprit;
    const int n = c.geometry.n;
    if (e.L1 < 2 || e.L2 < 2 || e.L1 > e.M1 || e.L2 > e.M2)
      throw config_error("superres.esprit: need 2 <= L_i <= M_i");
    if (n > (e.L1 - 1) * e.L2 || n > e.L1 * (e.L2 - 1) || n > (e.M1 - e.L1 + 1) * (e.M2 - e.L2 + 1))
      throw config_error("superres.esprit: windows too small for n nodes");
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot open config " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  json doc;
  try {
    doc = json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw config_error(path + ": " + e.what());
  }
  return parse_config(doc);
}

json to_json(const ExperimentConfig& c) {
  json doc;
  doc["experiment"] = to_string(c.kind);
  doc["seed"] = c.seed;
  if (!c.output.empty()) doc["output"] = c.output;
  if (c.rank_tol) doc["rank_tol"] = *c.rank_tol;

  json g;
  if (c.points) {
    g["points"] = matrix_to(*c.points, false);
  } else {
    g["kind"] = to_string(c.geometry.kind);
    g["n"] = c.geometry.n;
    g["d"] = c.geometry.d;
    if (c.geometry.coefficient) g["coefficient"] = *c.geometry.coefficient;
    g["seed"] = c.geometry.seed;
    g["scaling"] = to_string(c.geometry.scaling);
    g["trials"] = c.geometry_trials;
  }
  doc["geometry"] = g;

  json k;
  k["type"] = c.sinc ? "sinc" : "dirichlet";
  k["N"] = c.N;
  k["convention"] = c.convention == GridConvention::open ? "open" : "closed";
  k["scale"] = c.kernel_scale;
  if (c.frequencies) k["frequencies"] = matrix_to(*c.frequencies, true);
  doc["kernel"] = k;

  doc["sweep"] = {{"start", c.sweep.start}, {"stop", c.sweep.stop}, {"points", c.sweep.points}, {"log", c.sweep.log}};

  switch (c.kind) {
    case ExperimentKind::tightness: {
      const char* w = c.wronskian == WronskianKind::limit_gram ? "limit-gram"
                      : c.wronskian == WronskianKind::finite_difference ? "finite-difference"
                                                                       : "dirichlet";
      doc["tightness"] = {{"wronskian", w}, {"fd_step", c.fd_step}, {"det_fit", c.det_fit}};
      break;
    }
    case ExperimentKind::lattice:
      doc["lattice"] = {{"n_max", c.lattice_n_max},
                        {"d_max", c.lattice_d_max},
                        {"polynomials", c.lattice_polynomials},
                        {"queries", c.lattice_queries}};
      break;
    case ExperimentKind::superres_nls:
    case ExperimentKind::superres_esprit: {
      json r = {{"noise", c.noise},
                {"trials", c.trials},
                {"amplitudes", c.random_phase ? "random-phase" : "ones"},
                {"init_offset", c.init_offset}};
      r["nls"] = {{"max_iters", c.nls.max_iters},
                  {"gradient_tol", c.nls.gradient_tol},
                  {"step_tol", c.nls.step_tol},
                  {"polish_steps", c.nls.polish_steps}};
      r["esprit"] = {{"M1", c.esprit.M1}, {"M2", c.esprit.M2}, {"L1", c.esprit.L1}, {"L2", c.esprit.L2},
                     {"beta1", c.esprit.beta1}, {"beta2", c.esprit.beta2},
                     {"extended_precision", c.esprit.extended_precision}};
      doc["superres"] = r;
      break;
    }
    default:
      break;
  }
  return doc;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash(const ExperimentConfig& cfg) {
  // The output location does not change what is computed.
  json doc = to_json(cfg);
  doc.erase("output");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(doc.dump())));
  return buf;
}

}  // namespace flatlim
