#include "flatlim/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "flatlim/errors.hpp"

namespace flatlim {

namespace {

template <class Matrix>
void require_symmetric(const Matrix& m) {
  using boost::multiprecision::abs;
  using std::abs;
  if (m.rows() != m.cols()) throw std::invalid_argument("eigenvalues_sym: matrix not square");
  using Scalar = typename Matrix::Scalar;
  Scalar scale = Scalar(0);
  Scalar asym = Scalar(0);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      scale = std::max<Scalar>(scale, abs(m(i, j)));
      asym = std::max<Scalar>(asym, abs(m(i, j) - m(j, i)));
    }
  }
  if (asym > Scalar(1e-10) * scale)
    throw std::invalid_argument("eigenvalues_sym: matrix is not symmetric");
}

template <class Matrix>
std::vector<typename Matrix::Scalar> descending_spectrum(const Matrix& m) {
  require_symmetric(m);
  std::vector<typename Matrix::Scalar> out;
  if (m.rows() == 0) return out;
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw numerical_error("eigenvalues_sym: solver did not converge");
  const auto& ev = es.eigenvalues();
  for (Eigen::Index i = ev.size() - 1; i >= 0; --i) out.push_back(ev(i));
  return out;
}

void validate_eps_grid(const std::vector<double>& eps_grid) {
  if (eps_grid.size() < 5) throw std::invalid_argument("eps grid needs at least 5 points");
  for (std::size_t i = 0; i < eps_grid.size(); ++i) {
    if (!(eps_grid[i] > 0.0) || !std::isfinite(eps_grid[i]))
      throw std::invalid_argument("eps grid values must be positive and finite");
    if (i > 0 && !(eps_grid[i] < eps_grid[i - 1]))
      throw std::invalid_argument("eps grid must be strictly decreasing");
  }
}

// Columns [p_{k-1}, p_k) of V_{<=m}.
Eigen::Index block_start(int d, int k) { return static_cast<Eigen::Index>(total_degree_count(d, k - 1)); }

MatrixW to_wide(const Eigen::MatrixXd& m) { return m.cast<wide>(); }

}  // namespace

std::vector<double> eigenvalues_sym(const Eigen::MatrixXd& m) { return descending_spectrum(m); }
std::vector<wide> eigenvalues_sym(const MatrixW& m) { return descending_spectrum(m); }

std::vector<GroupPrediction> predict_groups(const RankProfile& profile) {
  std::vector<GroupPrediction> g;
  for (std::size_t k = 0; k < profile.increments.size(); ++k)
    g.push_back({2 * static_cast<int>(k), profile.increments[k]});
  return g;
}

bool EigenGroupReport::any_underflow() const {
  return std::any_of(underflow.begin(), underflow.end(), [](bool b) { return b; });
}

std::vector<double> geometric_grid(double hi, double lo, int points) {
  if (!(hi > lo) || !(lo > 0.0) || points < 2)
    throw std::invalid_argument("geometric_grid: need hi > lo > 0 and points >= 2");
  std::vector<double> g(static_cast<std::size_t>(points));
  const double lhi = std::log10(hi), llo = std::log10(lo);
  for (int i = 0; i < points; ++i)
    g[static_cast<std::size_t>(i)] = std::pow(10.0, lhi + (llo - lhi) * i / (points - 1));
  g.front() = hi;
  g.back() = lo;
  return g;
}

std::vector<double> default_eps_grid(double eps_max) {
  return geometric_grid(eps_max, eps_max * std::pow(10.0, -1.5), 20);
}

EigenGroupReport fit_scaling(const KernelSpec& spec, const NodeSet& nodes,
                             const std::vector<double>& eps_grid, const SpectralOptions& opts) {
  validate_eps_grid(eps_grid);
  EigenGroupReport rep;
  rep.profile = rank_profile(nodes, opts.rank_tol, opts.order);
  rep.eps_grid = eps_grid;
  rep.working_epsilon = spec.working_epsilon();
  const int n = nodes.size();

  std::vector<double> log_eps;
  std::vector<std::vector<double>> log_lambda(static_cast<std::size_t>(n));
  for (double eps : eps_grid) {
    const auto ev = eigenvalues_sym(kernel_matrix_wide(spec, nodes, wide(eps)));
    std::vector<double> row;
    for (const auto& v : ev) row.push_back(to_double(v));
    const wide floor = wide(opts.underflow_factor * rep.working_epsilon) * ev.front();
    const bool low = ev.back() < floor;
    rep.underflow.push_back(low);
    rep.eigenvalues.push_back(std::move(row));
    if (low) continue;
    log_eps.push_back(std::log(eps));
    for (int i = 0; i < n; ++i)
      log_lambda[static_cast<std::size_t>(i)].push_back(to_double(log(ev[static_cast<std::size_t>(i)])));
  }
  rep.points_used = static_cast<int>(log_eps.size());
  if (rep.any_underflow()) {
    std::ostringstream msg;
    msg << "underflow - shrink grid or reduce m: "
        << std::count(rep.underflow.begin(), rep.underflow.end(), true)
        << " eps values excluded from the fit";
    rep.warnings.push_back(msg.str());
  }
  if (rep.points_used < 3)
    throw numerical_error("fit_scaling: underflow - shrink grid or reduce m (fewer than 3 usable eps values)");

  int pos = 0;
  for (const auto& pred : predict_groups(rep.profile)) {
    EigenGroup g;
    g.predicted_exponent = pred.exponent;
    g.count = pred.count;
    g.first_position = pos;
    double sum = 0.0, stderr_max = 0.0, r2_min = 1.0;
    for (int j = 0; j < pred.count; ++j, ++pos) {
      const auto f = linear_fit(log_eps, log_lambda[static_cast<std::size_t>(pos)]);
      g.member_slopes.push_back(f.slope);
      sum += f.slope;
      stderr_max = std::max(stderr_max, f.slope_stderr);
      r2_min = std::min(r2_min, f.r_squared);
    }
    g.fitted_slope = sum / pred.count;
    g.slope_stderr = stderr_max;
    g.fit_r2 = r2_min;
    rep.groups.push_back(std::move(g));
  }
  return rep;
}

TightnessCertificate tightness_constant(const NodeSet& nodes, const WronskianMatrix& w,
                                        const SpectralOptions& opts) {
  TightnessCertificate cert;
  cert.profile = rank_profile(nodes, opts.rank_tol, opts.order);
  cert.wronskian_source = w.source;
  const int n = nodes.size();
  const int d = nodes.dim();
  const int m = cert.profile.moment_order;
  if (w.degree != m)
    throw std::invalid_argument("tightness_constant: Wronskian degree must equal the moment order");
  const auto pm = static_cast<Eigen::Index>(total_degree_count(d, m));
  if (w.entries.rows() != pm || w.entries.cols() != pm)
    throw std::invalid_argument("tightness_constant: Wronskian size does not match P_m");

  const Eigen::MatrixXd v = vandermonde_upto(nodes.points(), m, opts.order);
  cert.R_tilde = Eigen::MatrixXd::Zero(n, pm);

  // Q_{perp,k-1}; for k = 0 the whole space.
  Eigen::MatrixXd q_prev = Eigen::MatrixXd::Identity(n, n);
  int r_prev = 0;
  for (int k = 0; k <= m; ++k) {
    const int r_k = cert.profile.ranks[static_cast<std::size_t>(k)];
    const int t_k = r_k - r_prev;
    const Eigen::Index c0 = block_start(d, k);
    const Eigen::Index c1 = static_cast<Eigen::Index>(total_degree_count(d, k));

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(v.leftCols(c1));
    const Eigen::MatrixXd q_full = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd q_perp = q_full.rightCols(n - r_k);

    // range(Q_{perp,k}) must sit inside range(Q_{perp,k-1}).
    const Eigen::MatrixXd c = q_prev.transpose() * q_perp;
    if (q_perp.size() > 0 && (q_perp - q_prev * c).lpNorm<Eigen::Infinity>() > 1e-6)
      throw numerical_error("tightness_constant: rank deficiency inconsistent with the rank profile");

    // M_k = Q_{perp,k-1} Z, Z spanning the complement of range(c).
    Eigen::MatrixXd z;
    if (c.cols() == 0) {
      z = Eigen::MatrixXd::Identity(c.rows(), c.rows());
    } else {
      Eigen::HouseholderQR<Eigen::MatrixXd> cq(c);
      const Eigen::MatrixXd cq_full = cq.householderQ() * Eigen::MatrixXd::Identity(c.rows(), c.rows());
      z = cq_full.rightCols(c.rows() - c.cols());
    }
    if (z.cols() != t_k)
      throw numerical_error("tightness_constant: complement dimension differs from t_k");
    const Eigen::MatrixXd mk = q_prev * z;
    cert.R_tilde.block(r_prev, c0, t_k, c1 - c0) = mk.transpose() * v.middleCols(c0, c1 - c0);

    q_prev = q_perp;
    r_prev = r_k;
  }
  cert.r_tilde_rank = numerical_rank(cert.R_tilde, cert.profile.rank_tolerance);

  // det of the Hermitian R W R^T via its real 2n x 2n embedding, in wide.
  const MatrixW r = to_wide(cert.R_tilde);
  MatrixW a = r * to_wide(w.entries.real()) * r.transpose();
  MatrixW b = r * to_wide(w.entries.imag()) * r.transpose();
  const wide scale = std::max<wide>(a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff());
  const wide asym = (a - a.transpose()).cwiseAbs().maxCoeff() + (b + b.transpose()).cwiseAbs().maxCoeff();
  cert.imag_residue = scale > 0 ? to_double(asym / scale) : 0.0;
  if (cert.imag_residue > 1e-8)
    throw numerical_error("tightness_constant: R W R^T is not Hermitian; check the Wronskian");
  a = (a + a.transpose()) / 2;
  b = (b - b.transpose()) / 2;
  MatrixW e(2 * n, 2 * n);
  e << a, -b, b, a;
  const auto ev = eigenvalues_sym(e);
  wide det = 1;
  for (std::size_t i = 0; i < ev.size(); i += 2) det *= ev[i];
  cert.constant_C = to_double(det);
  return cert;
}

DetScaling det_scaling_check(const KernelSpec& spec, const NodeSet& nodes,
                             const std::vector<double>& eps_grid, const SpectralOptions& opts) {
  validate_eps_grid(eps_grid);
  DetScaling out;
  out.profile = rank_profile(nodes, opts.rank_tol, opts.order);
  for (std::size_t k = 0; k < out.profile.increments.size(); ++k)
    out.predicted_exponent += 2 * static_cast<int>(k) * out.profile.increments[k];

  std::vector<double> log_eps;
  for (double eps : eps_grid) {
    const auto ev = eigenvalues_sym(kernel_matrix_wide(spec, nodes, wide(eps)));
    wide acc = 0;
    for (std::size_t i = 0; i < ev.size(); ++i) {
      if (!(ev[i] > 0)) {
        std::ostringstream msg;
        msg << "det_scaling_check: eigenvalue " << i + 1 << " of " << ev.size()
            << " is non-positive (" << to_double(ev[i]) << ") at eps=" << eps;
        throw numerical_error(msg.str());
      }
      acc += log(ev[i]);
    }
    out.log_det.push_back(to_double(acc));
    log_eps.push_back(std::log(eps));
  }
  const auto f = linear_fit(log_eps, out.log_det);
  out.fitted_exponent = f.slope;
  out.slope_stderr = f.slope_stderr;
  out.fit_r2 = f.r_squared;
  return out;
}

BauerFike bauer_fike_gap(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("bauer_fike_gap: dimension mismatch");
  // Wide spectra of the (exactly representable) inputs, so the comparison
  // is only blurred far below double resolution.
  const MatrixW aw = a.cast<wide>(), bw = b.cast<wide>();
  const auto ea = eigenvalues_sym(aw);
  const auto eb = eigenvalues_sym(bw);
  const auto ed = eigenvalues_sym(MatrixW(aw - bw));
  wide gap = 0, norm = 0, scale = 0;
  for (const wide& mu : eb) {
    wide best = abs(mu - ea.front());
    for (const wide& lam : ea) best = std::min<wide>(best, abs(mu - lam));
    gap = std::max<wide>(gap, best);
  }
  for (const wide& v : ed) norm = std::max<wide>(norm, abs(v));
  for (const wide& v : ea) scale = std::max<wide>(scale, abs(v));
  for (const wide& v : eb) scale = std::max<wide>(scale, abs(v));
  BauerFike bf;
  bf.max_eigen_gap = to_double(gap);
  bf.spectral_norm_diff = to_double(norm);
  bf.holds_wide = gap <= norm + wide("1e-40") * scale;
  return bf;
}

ConvergenceStudy convergence_study(const NodeSet& nodes, double eps_max, const std::vector<int>& N_list,
                                   int eps_points, GridConvention convention, double jitter) {
  if (!(eps_max > 0.0) || eps_points < 2)
    throw std::invalid_argument("convergence_study: need eps_max > 0 and eps_points >= 2");
  ConvergenceStudy st;
  for (int N : N_list) {
    ConvergenceRow row;
    row.N = N;
    for (int i = 0; i < eps_points; ++i) {
      const double eps = eps_max * i / (eps_points - 1);
      const Eigen::MatrixXd dn = dirichlet_matrix_normalized(nodes, N, eps, convention);
      const Eigen::MatrixXd sn = sinc_matrix(nodes, eps);
      row.sup_entry_diff = std::max(row.sup_entry_diff, (dn - sn).cwiseAbs().maxCoeff());
      const auto bf = bauer_fike_gap(sn, dn);
      row.max_eigen_gap = std::max(row.max_eigen_gap, bf.max_eigen_gap);
      row.max_norm_diff = std::max(row.max_norm_diff, bf.spectral_norm_diff);
      row.bauer_fike_holds = row.bauer_fike_holds && bf.holds();
    }
    st.rows.push_back(row);
  }
  for (std::size_t i = 1; i < st.rows.size(); ++i) {
    if (st.rows[i].sup_entry_diff > (1.0 + jitter) * st.rows[i - 1].sup_entry_diff)
      st.entry_non_increasing = false;
    if (st.rows[i].max_eigen_gap > (1.0 + jitter) * st.rows[i - 1].max_eigen_gap)
      st.gap_non_increasing = false;
  }
  if (st.rows.size() >= 3) {
    std::vector<double> ns, diffs;
    for (const auto& r : st.rows) {
      ns.push_back(r.N);
      diffs.push_back(r.sup_entry_diff);
    }
    st.entry_rate = loglog_fit(ns, diffs).slope;
  }
  return st;
}

}  // namespace flatlim
