#include "flatlim/superres.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <boost/math/constants/constants.hpp>

#include "flatlim/errors.hpp"
#include "flatlim/random.hpp"

namespace flatlim {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

// Kuhn's augmenting-path matching restricted to pairs with dist <= limit.
bool perfect_matching(const Eigen::MatrixXd& dist, double limit, std::vector<int>& match_of_est) {
  const int n = static_cast<int>(dist.rows());
  match_of_est.assign(static_cast<std::size_t>(n), -1);
  std::vector<char> seen;
  std::function<bool(int)> augment = [&](int t) {
    for (int e = 0; e < n; ++e) {
      if (dist(t, e) > limit || seen[static_cast<std::size_t>(e)]) continue;
      seen[static_cast<std::size_t>(e)] = 1;
      const int owner = match_of_est[static_cast<std::size_t>(e)];
      if (owner < 0 || augment(owner)) {
        match_of_est[static_cast<std::size_t>(e)] = t;
        return true;
      }
    }
    return false;
  };
  for (int t = 0; t < n; ++t) {
    seen.assign(static_cast<std::size_t>(n), 0);
    if (!augment(t)) return false;
  }
  return true;
}

}  // namespace

double wrap_distance(const Eigen::Ref<const Eigen::RowVectorXd>& x,
                     const Eigen::Ref<const Eigen::RowVectorXd>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("wrap_distance: dimension mismatch");
  double best = 0.0;
  for (Eigen::Index c = 0; c < x.size(); ++c)
    best = std::max(best, std::abs(std::remainder(x(c) - y(c), two_pi)));
  return best;
}

Eigen::MatrixXd wrap_to_torus(const Eigen::MatrixXd& points) {
  return points.unaryExpr([](double v) {
    double w = v - two_pi * std::floor((v + std::numbers::pi) / two_pi);
    if (w >= std::numbers::pi) w -= two_pi;
    return w;
  });
}

SpikeSignal::SpikeSignal(Eigen::MatrixXd x, Eigen::VectorXcd a)
    : nodes(std::move(x)), coefficients(std::move(a)) {
  if (nodes.rows() != coefficients.size())
    throw std::invalid_argument("SpikeSignal: one coefficient per node required");
  for (Eigen::Index j = 0; j < coefficients.size(); ++j)
    if (coefficients(j) == std::complex<double>(0.0, 0.0))
      throw std::invalid_argument("SpikeSignal: coefficients must be nonzero");
  for (Eigen::Index i = 0; i < nodes.rows(); ++i)
    for (Eigen::Index j = i + 1; j < nodes.rows(); ++j)
      if (wrap_distance(nodes.row(i), nodes.row(j)) == 0.0)
        throw std::invalid_argument("SpikeSignal: nodes coincide on the torus");
}

bool cluster_check(const Eigen::MatrixXd& nodes, const ClusterSpec& spec) {
  if (!(spec.tau > 1.0)) throw std::invalid_argument("cluster_check: tau must exceed 1");
  if (!(spec.Delta > 0.0) || !(spec.Delta < std::numbers::pi / spec.tau))
    throw std::invalid_argument("cluster_check: need 0 < Delta < pi / tau");
  if (spec.n > 0 && nodes.rows() != spec.n) return false;
  const double lo = spec.Delta * (1.0 - 1e-12), hi = spec.tau * spec.Delta * (1.0 + 1e-12);
  for (Eigen::Index i = 0; i < nodes.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < nodes.rows(); ++j) {
      const double dist = wrap_distance(nodes.row(i), nodes.row(j));
      if (dist < lo || dist > hi) return false;
    }
  }
  return true;
}

Eigen::MatrixXcd complex_vandermonde(const Eigen::MatrixXd& nodes, const SamplingSet& grid) {
  if (nodes.cols() != grid.dim()) throw std::invalid_argument("complex_vandermonde: dimension mismatch");
  const Eigen::MatrixXd phase = grid.frequencies() * nodes.transpose();
  return phase.unaryExpr([](double t) { return std::polar(1.0, t); });
}

MeasurementSet fourier_measurements(const SpikeSignal& signal, const SamplingSet& grid,
                                    double noise_level, std::uint64_t seed, bool extended) {
  if (noise_level < 0.0) throw std::invalid_argument("fourier_measurements: noise level must be >= 0");
  MeasurementSet m{grid, complex_vandermonde(signal.nodes, grid) * signal.coefficients,
                   Eigen::VectorXcd::Zero(grid.size()), noise_level, seed, {}};
  if (noise_level > 0.0) {
    Rng rng(seed);
    for (Eigen::Index k = 0; k < m.noise.size(); ++k) {
      const double r = noise_level * std::sqrt(rng.uniform01());
      const double theta = two_pi * rng.uniform01();
      m.noise(k) = std::polar(r, theta);
    }
    m.values += m.noise;
  }
  if (extended) {
    const auto& f = grid.frequencies();
    m.values_wide.resize(grid.size());
    for (Eigen::Index k = 0; k < f.rows(); ++k) {
      complex_wide acc(wide(m.noise(k).real()), wide(m.noise(k).imag()));
      for (int j = 0; j < signal.size(); ++j) {
        wide phase = 0;
        for (Eigen::Index c = 0; c < f.cols(); ++c) phase += wide(f(k, c)) * wide(signal.nodes(j, c));
        const complex_wide a(wide(signal.coefficients(j).real()), wide(signal.coefficients(j).imag()));
        acc += a * complex_wide(cos(phase), sin(phase));
      }
      m.values_wide(k) = acc;
    }
  }
  return m;
}

Matching bottleneck_assignment(const Eigen::MatrixXd& dist) {
  if (dist.rows() != dist.cols()) throw std::invalid_argument("bottleneck_assignment: matrix not square");
  const int n = static_cast<int>(dist.rows());
  Matching out;
  if (n == 0) return out;
  std::vector<double> levels(dist.data(), dist.data() + dist.size());
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

  std::size_t lo = 0, hi = levels.size() - 1;
  std::vector<int> match;
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (perfect_matching(dist, levels[mid], match))
      hi = mid;
    else
      lo = mid + 1;
  }
  perfect_matching(dist, levels[lo], match);
  out.max_distance = levels[lo];
  out.assignment.assign(static_cast<std::size_t>(n), -1);
  for (int e = 0; e < n; ++e) out.assignment[static_cast<std::size_t>(match[static_cast<std::size_t>(e)])] = e;
  return out;
}

Matching optimal_matching(const Eigen::MatrixXd& truth, const Eigen::MatrixXd& estimate) {
  if (truth.rows() != estimate.rows() || truth.cols() != estimate.cols())
    throw std::invalid_argument("optimal_matching: truth and estimate differ in shape");
  const auto n = truth.rows();
  Eigen::MatrixXd dist(n, n);
  for (Eigen::Index t = 0; t < n; ++t)
    for (Eigen::Index e = 0; e < n; ++e) dist(t, e) = wrap_distance(truth.row(t), estimate.row(e));
  return bottleneck_assignment(dist);
}

double error_kappa(const SpikeSignal& truth, const SpikeSignal& estimate, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("error_kappa: sigma must be positive");
  if (truth.size() != estimate.size()) throw std::invalid_argument("error_kappa: node counts differ");
  return optimal_matching(truth.nodes, estimate.nodes).max_distance / sigma;
}

NlsProblem::NlsProblem(const MeasurementSet& meas, int n)
    : freqs_(meas.grid.frequencies()), data_(meas.values), n_(n), d_(meas.grid.dim()) {
  if (n < 1) throw std::invalid_argument("NlsProblem: n must be >= 1");
  if (data_.size() != freqs_.rows()) throw std::invalid_argument("NlsProblem: values/grid size mismatch");
}

Eigen::VectorXd NlsProblem::pack(const SpikeSignal& s) const {
  if (s.size() != n_ || s.dim() != d_) throw std::invalid_argument("NlsProblem::pack: shape mismatch");
  Eigen::VectorXd p(num_params());
  p.head(n_) = s.coefficients.real();
  p.segment(n_, n_) = s.coefficients.imag();
  for (int j = 0; j < n_; ++j)
    for (int c = 0; c < d_; ++c) p(2 * n_ + j * d_ + c) = s.nodes(j, c);
  return p;
}

SpikeSignal NlsProblem::unpack(const Eigen::VectorXd& p) const {
  SpikeSignal s;
  s.coefficients.resize(n_);
  s.nodes.resize(n_, d_);
  for (int j = 0; j < n_; ++j) {
    s.coefficients(j) = {p(j), p(n_ + j)};
    for (int c = 0; c < d_; ++c) s.nodes(j, c) = p(2 * n_ + j * d_ + c);
  }
  return s;
}

Eigen::VectorXd NlsProblem::residual(const Eigen::VectorXd& p) const {
  const SpikeSignal s = unpack(p);
  const Eigen::MatrixXd phase = freqs_ * s.nodes.transpose();
  const Eigen::MatrixXcd e = phase.unaryExpr([](double t) { return std::polar(1.0, t); });
  const Eigen::VectorXcd diff = e * s.coefficients - data_;
  Eigen::VectorXd r(num_residuals());
  r << diff.real(), diff.imag();
  return r;
}

Eigen::MatrixXd NlsProblem::jacobian(const Eigen::VectorXd& p) const {
  const SpikeSignal s = unpack(p);
  const Eigen::Index g = freqs_.rows();
  const Eigen::MatrixXd phase = freqs_ * s.nodes.transpose();
  const Eigen::MatrixXcd e = phase.unaryExpr([](double t) { return std::polar(1.0, t); });
  Eigen::MatrixXd jac(2 * g, num_params());
  const std::complex<double> iu(0.0, 1.0);
  for (int j = 0; j < n_; ++j) {
    const Eigen::VectorXcd ej = e.col(j);
    jac.col(j) << ej.real(), ej.imag();
    const Eigen::VectorXcd iej = iu * ej;
    jac.col(n_ + j) << iej.real(), iej.imag();
    const Eigen::VectorXcd aej = iu * s.coefficients(j) * ej;
    for (int c = 0; c < d_; ++c) {
      const Eigen::VectorXcd col = aej.cwiseProduct(freqs_.col(c).cast<std::complex<double>>());
      jac.col(2 * n_ + j * d_ + c) << col.real(), col.imag();
    }
  }
  return jac;
}

namespace {

void finish_result(RecoveryResult& res, const MeasurementSet& meas, const SpikeSignal* truth) {
  if (!truth) return;
  if (res.nodes_wide.size() > 0) {
    if (res.nodes_wide.rows() != truth->nodes.rows() || res.nodes_wide.cols() != truth->nodes.cols())
      throw std::invalid_argument("recovery: truth and estimate differ in shape");
    const wide tau = 2 * boost::math::constants::pi<wide>();
    const auto n = truth->nodes.rows();
    Eigen::MatrixXd dist(n, n);
    for (Eigen::Index t = 0; t < n; ++t) {
      for (Eigen::Index e = 0; e < n; ++e) {
        wide best = 0;
        for (Eigen::Index c = 0; c < truth->nodes.cols(); ++c) {
          wide diff = res.nodes_wide(e, c) - wide(truth->nodes(t, c));
          diff -= tau * round(diff / tau);
          best = std::max<wide>(best, abs(diff));
        }
        dist(t, e) = to_double(best);
      }
    }
    res.matching = bottleneck_assignment(dist);
  } else {
    res.matching = optimal_matching(truth->nodes, res.estimate.nodes);
  }
  res.max_node_error = res.matching.max_distance;
  res.kappa = meas.noise_level > 0.0 ? res.max_node_error / meas.noise_level : res.max_node_error;
}

}  // namespace

RecoveryResult nls_recover(const MeasurementSet& meas, int n, const SpikeSignal& init,
                           const NlsOptions& opts, const SpikeSignal* truth) {
  const NlsProblem prob(meas, n);
  Eigen::VectorXd p = prob.pack(init);
  Eigen::VectorXd r = prob.residual(p);
  Eigen::MatrixXd jac = prob.jacobian(p);
  double cost = 0.5 * r.squaredNorm();
  const Eigen::Index dim = p.size();

  RecoveryResult res;
  res.cost_history.push_back(cost);
  double mu = 1e-3 * jac.colwise().squaredNorm().sum() / static_cast<double>(dim);
  if (!(mu > 0.0)) mu = 1e-3;

  Eigen::MatrixXd aug(jac.rows() + dim, dim);
  Eigen::VectorXd rhs(jac.rows() + dim);
  int iter = 0;
  for (; iter < opts.max_iters; ++iter) {
    const Eigen::VectorXd grad = jac.transpose() * r;
    res.final_gradient_norm = grad.lpNorm<Eigen::Infinity>();
    if (res.final_gradient_norm < opts.gradient_tol) {
      res.converged = true;
      break;
    }
    aug.topRows(jac.rows()) = jac;
    aug.bottomRows(dim) = std::sqrt(mu) * Eigen::MatrixXd::Identity(dim, dim);
    rhs.head(jac.rows()) = -r;
    rhs.tail(dim).setZero();
    const Eigen::VectorXd step = aug.householderQr().solve(rhs);
    if (step.norm() < opts.step_tol * (p.norm() + opts.step_tol)) {
      res.converged = true;
      break;
    }
    const Eigen::VectorXd p_new = p + step;
    const Eigen::VectorXd r_new = prob.residual(p_new);
    const double cost_new = 0.5 * r_new.squaredNorm();
    if (cost_new < cost) {
      p = p_new;
      r = r_new;
      cost = cost_new;
      jac = prob.jacobian(p);
      mu /= 10.0;
      res.cost_history.push_back(cost);
    } else {
      mu *= 10.0;
      if (mu > 1e300) {
        res.diagnostic = "damping overflow";
        break;
      }
    }
  }
  // Gauss-Newton polish. The stopping tests fire while the damping still
  // exceeds the smallest curvatures of J^T J, so the ill-conditioned
  // directions are resolved with undamped steps; the best point on the
  // path is kept if it does not raise the cost.
  if (res.converged && opts.polish_steps > 0) {
    Eigen::VectorXd q = p, rq = r;
    Eigen::MatrixXd jq = jac;
    Eigen::VectorXd best = p;
    double best_cost = cost;
    for (int k = 0; k < opts.polish_steps; ++k) {
      const Eigen::VectorXd step = jq.colPivHouseholderQr().solve(-rq);
      q += step;
      rq = prob.residual(q);
      const double c = 0.5 * rq.squaredNorm();
      if (c <= best_cost) {
        best = q;
        best_cost = c;
      }
      if (step.norm() < opts.step_tol * (q.norm() + opts.step_tol)) break;
      jq = prob.jacobian(q);
    }
    if (best_cost < cost) {
      p = best;
      cost = best_cost;
      r = prob.residual(p);
      res.final_gradient_norm = (prob.jacobian(p).transpose() * r).lpNorm<Eigen::Infinity>();
      res.cost_history.push_back(cost);
    }
  }
  res.iterations = iter;
  if (!res.converged && res.diagnostic.empty()) {
    std::ostringstream msg;
    msg << "no convergence after " << iter << " iterations; gradient inf-norm "
        << res.final_gradient_norm;
    res.diagnostic = msg.str();
  }
  SpikeSignal est = prob.unpack(p);
  est.nodes = wrap_to_torus(est.nodes);
  res.estimate = std::move(est);
  finish_result(res, meas, truth);
  return res;
}

namespace {

template <class C>
using MatrixC = Eigen::Matrix<C, Eigen::Dynamic, Eigen::Dynamic>;

// Block-Hankel-of-Hankel matrix of the M1 x M2 sample block.
template <class C, class Sample>
MatrixC<C> enhanced_matrix(const EspritParams& prm, Sample&& h) {
  const int K1 = prm.M1 - prm.L1 + 1, K2 = prm.M2 - prm.L2 + 1;
  MatrixC<C> e(prm.L1 * prm.L2, K1 * K2);
  for (int p1 = 0; p1 < prm.L1; ++p1)
    for (int p2 = 0; p2 < prm.L2; ++p2)
      for (int q1 = 0; q1 < K1; ++q1)
        for (int q2 = 0; q2 < K2; ++q2) e(p1 * prm.L2 + p2, q1 * K2 + q2) = h(p1 + q1, p2 + q2);
  return e;
}

void check_gap(double s_n, double s_next) {
  if (s_next > 0.0 && s_n / s_next < 1.0 + 1e-8)
    throw numerical_error("esprit_2d: subspace gap too small - unresolvable at this noise");
}

// Gram matrix E E* of the enhanced matrix, accumulated from the Hankel
// structure: S_ab(p2, r2) = sum_q2 h(a, p2 + q2) conj(h(b, r2 + q2)) slides
// along diagonals, and E E* sums S over the first index window.
MatrixC<complex_wide> enhanced_gram(const EspritParams& prm, const std::function<complex_wide(int, int)>& h) {
  const int L1 = prm.L1, L2 = prm.L2;
  const int K1 = prm.M1 - L1 + 1, K2 = prm.M2 - L2 + 1;
  const int span = 2 * L1 - 1;
  std::vector<MatrixC<complex_wide>> s(static_cast<std::size_t>(prm.M1) * span);
  auto slot = [&](int a, int b) -> MatrixC<complex_wide>& {
    return s[static_cast<std::size_t>(a) * span + (b - a + L1 - 1)];
  };
  std::vector<complex_wide> ra(prm.M2), rb(prm.M2);
  for (int a = 0; a < prm.M1; ++a) {
    for (int c = 0; c < prm.M2; ++c) ra[c] = h(a, c);
    for (int b = std::max(0, a - L1 + 1); b <= std::min(prm.M1 - 1, a + L1 - 1); ++b) {
      for (int c = 0; c < prm.M2; ++c) rb[c] = std::conj(h(b, c));
      MatrixC<complex_wide>& m = slot(a, b);
      m.resize(L2, L2);
      for (int p2 = 0; p2 < L2; ++p2) {
        for (int r2 = 0; r2 < L2; ++r2) {
          if (p2 > 0 && r2 > 0) {
            m(p2, r2) = m(p2 - 1, r2 - 1) - ra[p2 - 1] * rb[r2 - 1] + ra[p2 + K2 - 1] * rb[r2 + K2 - 1];
            continue;
          }
          complex_wide acc(0);
          for (int q = 0; q < K2; ++q) acc += ra[p2 + q] * rb[r2 + q];
          m(p2, r2) = acc;
        }
      }
    }
  }
  MatrixC<complex_wide> g(L1 * L2, L1 * L2);
  for (int p1 = 0; p1 < L1; ++p1) {
    for (int r1 = 0; r1 < L1; ++r1) {
      MatrixC<complex_wide> blk = MatrixC<complex_wide>::Zero(L2, L2);
      for (int q = 0; q < K1; ++q) blk += slot(p1 + q, r1 + q);
      g.block(p1 * L2, r1 * L2, L2, L2) = blk;
    }
  }
  return g;
}

MatrixC<complex_wide> orthonormal_columns(const MatrixC<complex_wide>& y) {
  Eigen::HouseholderQR<MatrixC<complex_wide>> qr(y);
  return qr.householderQ() * MatrixC<complex_wide>::Identity(y.rows(), y.cols());
}

// Leading left singular vectors of E: block subspace iteration on E E*
// with n + 4 vectors and Rayleigh-Ritz, stopped once the leading n Ritz
// residuals fall below 1e-45 of the top Ritz value.
MatrixC<complex_wide> signal_subspace_wide(const EspritParams& prm, const std::function<complex_wide(int, int)>& h,
                                           int n) {
  const MatrixC<complex_wide> g = enhanced_gram(prm, h);
  const Eigen::Index dim = g.rows();
  const Eigen::Index k = std::min<Eigen::Index>(n + 4, dim);
  Rng rng(0x5eedULL);
  MatrixC<complex_wide> q(dim, k);
  for (Eigen::Index i = 0; i < dim; ++i)
    for (Eigen::Index j = 0; j < k; ++j)
      q(i, j) = complex_wide(wide(rng.uniform(-1.0, 1.0)), wide(rng.uniform(-1.0, 1.0)));
  q = orthonormal_columns(q);

  const wide tol("1e-45");
  for (int it = 0; it < 500; ++it) {
    const MatrixC<complex_wide> z = g * q;
    MatrixC<complex_wide> hk = q.adjoint() * z;
    hk = (0.5 * (hk + hk.adjoint())).eval();
    Eigen::SelfAdjointEigenSolver<MatrixC<complex_wide>> es(hk);
    if (es.info() != Eigen::Success) throw numerical_error("esprit_2d: Ritz eigensolve failed");
    const auto& ev = es.eigenvalues();  // ascending
    MatrixC<complex_wide> w(k, n);
    for (int j = 0; j < n; ++j) w.col(j) = es.eigenvectors().col(k - 1 - j);
    const wide top = ev(k - 1);
    bool done = top > 0;
    for (int j = 0; j < n && done; ++j) {
      const MatrixC<complex_wide> r = z * w.col(j) - ev(k - 1 - j) * (q * w.col(j));
      done = r.norm() <= tol * top;
    }
    if (done) {
      const double s_n = std::sqrt(std::max(0.0, to_double(ev(k - n))));
      const double s_next = k > n ? std::sqrt(std::max(0.0, to_double(ev(k - n - 1)))) : 0.0;
      check_gap(s_n, s_next);
      return q * w;
    }
    q = orthonormal_columns(z);
  }
  throw numerical_error("esprit_2d: subspace iteration did not converge - unresolvable at this noise");
}

template <class C>
double inf_norm(const MatrixC<C>& m) {
  double best = 0.0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    double row = 0.0;
    for (Eigen::Index j = 0; j < m.cols(); ++j) row += to_double(abs(m(i, j)));
    best = std::max(best, row);
  }
  return best;
}

// Steps after the signal subspace: shift equations, joint eigenbasis and
// paired phases.
template <class C>
Eigen::Matrix<typename C::value_type, Eigen::Dynamic, Eigen::Dynamic> esprit_nodes(const MatrixC<C>& us,
                                                                                 const EspritParams& prm) {
  using R = typename C::value_type;
  const auto n = us.cols();
  const int rows1 = (prm.L1 - 1) * prm.L2;
  const MatrixC<C> psi1 = us.topRows(rows1).householderQr().solve(MatrixC<C>(us.bottomRows(rows1)));
  const int rows2 = prm.L1 * (prm.L2 - 1);
  MatrixC<C> lo2(rows2, n), hi2(rows2, n);
  for (int p1 = 0, r = 0; p1 < prm.L1; ++p1) {
    for (int p2 = 0; p2 + 1 < prm.L2; ++p2, ++r) {
      lo2.row(r) = us.row(p1 * prm.L2 + p2);
      hi2.row(r) = us.row(p1 * prm.L2 + p2 + 1);
    }
  }
  const MatrixC<C> psi2 = lo2.householderQr().solve(hi2);

  const MatrixC<C> joint = C(R(prm.beta1)) * psi1 + C(R(prm.beta2)) * psi2;
  Eigen::ComplexEigenSolver<MatrixC<C>> ces(joint);
  if (ces.info() != Eigen::Success) throw numerical_error("esprit_2d: joint eigendecomposition failed");
  const MatrixC<C> t = ces.eigenvectors();
  const MatrixC<C> t_inv = t.partialPivLu().inverse();
  if (!(inf_norm(t) * inf_norm(t_inv) < 1e14))
    throw numerical_error("esprit_2d: defective joint eigenbasis (pairing failed)");
  const MatrixC<C> d1 = t_inv * psi1 * t;
  const MatrixC<C> d2 = t_inv * psi2 * t;

  Eigen::Matrix<R, Eigen::Dynamic, Eigen::Dynamic> nodes(n, 2);
  for (Eigen::Index j = 0; j < n; ++j) {
    nodes(j, 0) = arg(d1(j, j));
    nodes(j, 1) = arg(d2(j, j));
  }
  return nodes;
}

}  // namespace

RecoveryResult esprit_2d(const MeasurementSet& meas, int n, const EspritParams& prm, const SpikeSignal* truth) {
  const auto& grid = meas.grid;
  if (!grid.is_full_grid() || grid.dim() != 2)
    throw std::invalid_argument("esprit_2d: measurements must lie on a full 2-D grid");
  const int side = 2 * grid.half_width() + 1;
  if (prm.M1 > side || prm.M2 > side)
    throw std::invalid_argument("esprit_2d: M1, M2 exceed the measured grid");
  if (prm.L1 < 2 || prm.L2 < 2 || prm.L1 > prm.M1 || prm.L2 > prm.M2)
    throw std::invalid_argument("esprit_2d: need 2 <= L_i <= M_i");
  const int K1 = prm.M1 - prm.L1 + 1, K2 = prm.M2 - prm.L2 + 1;
  if (n < 1 || n > prm.L1 * prm.L2 || n > K1 * K2)
    throw std::invalid_argument("esprit_2d: n incompatible with the window sizes");
  if (n > (prm.L1 - 1) * prm.L2 || n > prm.L1 * (prm.L2 - 1))
    throw std::invalid_argument("esprit_2d: window too small for the shift equations");
  if (prm.extended_precision && meas.values_wide.size() != meas.values.size())
    throw std::invalid_argument("esprit_2d: extended precision needs measurements generated with extended=true");

  // Frequencies are ordered with the second coordinate fastest; sample
  // (a, b) of the block is frequency (a - hw, b - hw).
  auto index = [side](int a, int b) { return static_cast<Eigen::Index>(a) * side + b; };

  Eigen::MatrixXd nodes;
  MatrixW nodes_wide;
  if (prm.extended_precision) {
    auto h = [&](int a, int b) { return meas.values_wide(index(a, b)); };
    nodes_wide = esprit_nodes<complex_wide>(signal_subspace_wide(prm, h, n), prm);
    nodes = wrap_to_torus(nodes_wide.unaryExpr([](const wide& v) { return to_double(v); }));
  } else {
    const auto e = enhanced_matrix<std::complex<double>>(prm, [&](int a, int b) { return meas.values(index(a, b)); });
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(e, Eigen::ComputeThinU);
    const auto& sv = svd.singularValues();
    if (n < sv.size()) check_gap(sv(n - 1), sv(n));
    nodes = wrap_to_torus(esprit_nodes<std::complex<double>>(svd.matrixU().leftCols(n), prm));
  }

  // Amplitudes against the actual frequencies, so the index shift of the
  // Hankel block needs no separate phase correction.
  const Eigen::MatrixXcd u = complex_vandermonde(nodes, grid);
  const Eigen::VectorXcd amp = u.colPivHouseholderQr().solve(meas.values);

  RecoveryResult res;
  res.estimate.nodes = nodes;
  res.estimate.coefficients = amp;
  res.nodes_wide = std::move(nodes_wide);
  res.converged = true;
  finish_result(res, meas, truth);
  return res;
}

LinearFit slope_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() < 4) throw std::invalid_argument("slope_fit: need at least 4 points");
  return loglog_fit(x, y);
}

SingularScalingReport singular_scaling_fit(const NodeSet& geometry, int N, std::vector<double> delta_grid,
                                           GridConvention convention, const SpectralOptions& opts) {
  if (N < 1) throw std::invalid_argument("singular_scaling_fit: N must be >= 1");
  std::sort(delta_grid.begin(), delta_grid.end(), std::greater<>());
  SingularScalingReport out;
  out.N = N;
  out.delta_grid = delta_grid;
  for (double delta : delta_grid) out.ndelta_grid.push_back(N * delta);

  // (2N)^{-d} D_{G_N}(N Delta (y - y') / N) = (U*U)/(2N)^d for X = Delta Y.
  const auto grid = SamplingSet::full_grid(N, geometry.dim(), convention);
  const auto spec = KernelSpec::dirichlet(grid, 1.0 / grid.normalization());
  out.report = fit_scaling(spec, geometry.scaled(1.0 / N), out.ndelta_grid, opts);
  out.sigma_min_sq_exponent = out.report.groups.back().member_slopes.back();
  return out;
}

}  // namespace flatlim
