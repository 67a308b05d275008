#include "flatlim/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace flatlim {

namespace {

using std::cos;
using std::sin;
using boost::multiprecision::cos;
using boost::multiprecision::sin;
using boost::multiprecision::abs;
using std::abs;

template <class T>
T dirichlet_1d(const T& u, int half_width) {
  const T s = sin(u / 2);
  const T cutoff = std::is_same_v<T, double> ? T(1e-7) : T(1e-30);
  if (abs(s) < cutoff) {
    T acc = T(1);
    for (int j = 1; j <= half_width; ++j) acc += 2 * cos(T(j) * u);
    return acc;
  }
  return sin((T(half_width) + T(0.5)) * u) / s;
}

template <class T>
T dirichlet_impl(const SamplingSet& s, std::span<const T> u) {
  if (static_cast<int>(u.size()) != s.dim())
    throw std::invalid_argument("dirichlet_eval: dimension mismatch");
  if (s.is_full_grid()) {
    T prod = T(1);
    for (const auto& uc : u) prod *= dirichlet_1d(uc, s.half_width());
    return prod;
  }
  T acc = T(0);
  const auto& f = s.frequencies();
  for (Eigen::Index r = 0; r < f.rows(); ++r) {
    T dot = T(0);
    for (Eigen::Index c = 0; c < f.cols(); ++c) dot += u[static_cast<std::size_t>(c)] * T(f(r, c));
    acc += cos(dot);
  }
  return acc;
}

template <class T>
T sinc_impl(const T& u) {
  const T cutoff = std::is_same_v<T, double> ? T(1e-8) : T(1e-12);
  if (abs(u) < cutoff) {
    const T u2 = u * u;
    return T(1) - u2 / 6 + u2 * u2 / 120;
  }
  return sin(u) / u;
}

template <class T>
T sinc_product(std::span<const T> x, std::span<const T> y) {
  T prod = T(1);
  for (std::size_t i = 0; i < x.size(); ++i) prod *= sinc_impl<T>(x[i] - y[i]);
  return prod;
}

std::complex<double> phase_i_pow(int a) {
  switch (((a % 4) + 4) % 4) {
    case 0: return {1.0, 0.0};
    case 1: return {0.0, 1.0};
    case 2: return {-1.0, 0.0};
    default: return {0.0, -1.0};
  }
}

// i^{|alpha|} (-i)^{|beta|}
std::complex<double> wronskian_phase(int a, int b) { return phase_i_pow(a) * phase_i_pow(3 * b); }

bool rows_lex_less(const Eigen::MatrixXd& f, Eigen::Index a, Eigen::Index b) {
  for (Eigen::Index c = 0; c < f.cols(); ++c) {
    if (f(a, c) != f(b, c)) return f(a, c) < f(b, c);
  }
  return false;
}

std::vector<Eigen::Index> lex_order(const Eigen::MatrixXd& f) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(f.rows()));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::sort(idx.begin(), idx.end(),
            [&](Eigen::Index a, Eigen::Index b) { return rows_lex_less(f, a, b); });
  return idx;
}

template <class T>
std::vector<T> scaled_row(const Eigen::MatrixXd& p, Eigen::Index i, const T& eps) {
  std::vector<T> row(static_cast<std::size_t>(p.cols()));
  for (Eigen::Index c = 0; c < p.cols(); ++c) row[static_cast<std::size_t>(c)] = eps * T(p(i, c));
  return row;
}

template <class T, class Eval>
Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> assemble(const NodeSet& nodes, const T& eps,
                                                          Eval&& eval) {
  const int n = nodes.size();
  std::vector<std::vector<T>> rows;
  rows.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) rows.push_back(scaled_row<T>(nodes.points(), i, eps));
  Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic> k(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const T v = eval(std::span<const T>(rows[static_cast<std::size_t>(i)]),
                       std::span<const T>(rows[static_cast<std::size_t>(j)]));
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

}  // namespace

SamplingSet SamplingSet::full_grid(int N, int d, GridConvention convention) {
  if (N < 1) throw std::invalid_argument("SamplingSet::full_grid: N must be >= 1");
  if (d < 1) throw std::invalid_argument("SamplingSet::full_grid: d must be >= 1");
  SamplingSet s;
  s.full_grid_ = true;
  s.N_ = N;
  s.convention_ = convention;
  s.half_width_ = convention == GridConvention::closed ? N : N - 1;
  s.normalization_ = std::pow(2.0 * N, d);
  const int side = 2 * s.half_width_ + 1;
  Eigen::Index total = 1;
  for (int c = 0; c < d; ++c) total *= side;
  s.freqs_.resize(total, d);
  for (Eigen::Index r = 0; r < total; ++r) {
    Eigen::Index rem = r;
    for (int c = d - 1; c >= 0; --c) {
      s.freqs_(r, c) = static_cast<double>(rem % side - s.half_width_);
      rem /= side;
    }
  }
  return s;
}

SamplingSet SamplingSet::from_list(Eigen::MatrixXd frequencies, double normalization) {
  if (frequencies.rows() == 0 || frequencies.cols() < 1)
    throw std::invalid_argument("SamplingSet::from_list: empty frequency list");
  if (!frequencies.allFinite()) throw std::invalid_argument("SamplingSet: non-finite frequency");
  const Eigen::MatrixXd negated = -frequencies;
  const auto a = lex_order(frequencies);
  const auto b = lex_order(negated);
  const double tol = 1e-12 * (1.0 + frequencies.lpNorm<Eigen::Infinity>());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = (frequencies.row(a[i]) - negated.row(b[i])).lpNorm<Eigen::Infinity>();
    if (diff > tol)
      throw std::invalid_argument("SamplingSet: frequency set is not symmetric about the origin");
  }
  SamplingSet s;
  s.freqs_ = std::move(frequencies);
  s.normalization_ = normalization;
  return s;
}

SamplingSet SamplingSet::with_normalization(double c) const {
  SamplingSet s = *this;
  s.normalization_ = c;
  return s;
}

double dirichlet_eval(const SamplingSet& s, std::span<const double> u) {
  return dirichlet_impl<double>(s, u);
}

wide dirichlet_eval(const SamplingSet& s, std::span<const wide> u) {
  return dirichlet_impl<wide>(s, u);
}

double dirichlet_eval_direct(const SamplingSet& s, std::span<const double> u) {
  if (static_cast<int>(u.size()) != s.dim())
    throw std::invalid_argument("dirichlet_eval_direct: dimension mismatch");
  const auto& f = s.frequencies();
  double acc = 0.0;
  for (Eigen::Index r = 0; r < f.rows(); ++r) {
    double dot = 0.0;
    for (Eigen::Index c = 0; c < f.cols(); ++c) dot += u[static_cast<std::size_t>(c)] * f(r, c);
    acc += std::cos(dot);
  }
  return acc;
}

std::complex<double> dirichlet_eval_complex(const SamplingSet& s, std::span<const double> u) {
  if (static_cast<int>(u.size()) != s.dim())
    throw std::invalid_argument("dirichlet_eval_complex: dimension mismatch");
  const auto& f = s.frequencies();
  std::complex<double> acc{0.0, 0.0};
  for (Eigen::Index r = 0; r < f.rows(); ++r) {
    double dot = 0.0;
    for (Eigen::Index c = 0; c < f.cols(); ++c) dot += u[static_cast<std::size_t>(c)] * f(r, c);
    acc += std::polar(1.0, dot);
  }
  return acc;
}

double sinc(double u) { return sinc_impl<double>(u); }
wide sinc(const wide& u) { return sinc_impl<wide>(u); }

KernelSpec KernelSpec::dirichlet(SamplingSet s, double scale) {
  return KernelSpec(DirichletKernel{std::move(s), scale});
}

KernelSpec KernelSpec::sinc() { return KernelSpec(SincKernel{}); }

KernelSpec KernelSpec::custom(CustomKernel k) {
  if (!k.eval) throw std::invalid_argument("KernelSpec::custom: evaluator required");
  return KernelSpec(std::move(k));
}

double KernelSpec::operator()(std::span<const double> x, std::span<const double> y) const {
  if (x.size() != y.size()) throw std::invalid_argument("kernel: point dimension mismatch");
  return std::visit(
      [&](const auto& k) -> double {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, DirichletKernel>) {
          std::vector<double> u(x.size());
          for (std::size_t i = 0; i < x.size(); ++i) u[i] = x[i] - y[i];
          return k.scale * dirichlet_eval(k.sampling, std::span<const double>(u));
        } else if constexpr (std::is_same_v<K, SincKernel>) {
          return sinc_product<double>(x, y);
        } else {
          return k.eval(x, y);
        }
      },
      kind_);
}

wide KernelSpec::evaluate(std::span<const wide> x, std::span<const wide> y) const {
  if (x.size() != y.size()) throw std::invalid_argument("kernel: point dimension mismatch");
  return std::visit(
      [&](const auto& k) -> wide {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, DirichletKernel>) {
          std::vector<wide> u(x.size());
          for (std::size_t i = 0; i < x.size(); ++i) u[i] = x[i] - y[i];
          return wide(k.scale) * dirichlet_eval(k.sampling, std::span<const wide>(u));
        } else if constexpr (std::is_same_v<K, SincKernel>) {
          return sinc_product<wide>(x, y);
        } else {
          if (k.eval_wide) return k.eval_wide(x, y);
          std::vector<double> xd(x.size()), yd(y.size());
          for (std::size_t i = 0; i < x.size(); ++i) {
            xd[i] = to_double(x[i]);
            yd[i] = to_double(y[i]);
          }
          return wide(k.eval(xd, yd));
        }
      },
      kind_);
}

double KernelSpec::working_epsilon() const {
  if (const auto* c = as_custom(); c && !c->eval_wide) return std::numeric_limits<double>::epsilon();
  return to_double(std::numeric_limits<wide>::epsilon());
}

std::string KernelSpec::name() const {
  if (as_dirichlet()) return "dirichlet";
  if (is_sinc()) return "sinc";
  return as_custom()->name.empty() ? "custom" : as_custom()->name;
}

Eigen::MatrixXd kernel_matrix(const KernelSpec& spec, const NodeSet& nodes, double eps) {
  if (eps < 0.0) throw std::invalid_argument("kernel_matrix: eps must be >= 0");
  return assemble<double>(nodes, eps, [&](std::span<const double> x, std::span<const double> y) {
    return spec(x, y);
  });
}

MatrixW kernel_matrix_wide(const KernelSpec& spec, const NodeSet& nodes, const wide& eps) {
  if (eps < 0) throw std::invalid_argument("kernel_matrix: eps must be >= 0");
  return assemble<wide>(nodes, eps, [&](std::span<const wide> x, std::span<const wide> y) {
    return spec.evaluate(x, y);
  });
}

Eigen::MatrixXd dirichlet_matrix_normalized(const NodeSet& nodes, int N, double eps,
                                            GridConvention convention) {
  const auto grid = SamplingSet::full_grid(N, nodes.dim(), convention);
  const auto spec = KernelSpec::dirichlet(grid, 1.0 / grid.normalization());
  return kernel_matrix(spec, nodes.scaled(1.0 / N), eps);
}

MatrixW dirichlet_matrix_normalized_wide(const NodeSet& nodes, int N, const wide& eps,
                                         GridConvention convention) {
  const auto grid = SamplingSet::full_grid(N, nodes.dim(), convention);
  const auto spec = KernelSpec::dirichlet(grid);
  // Divide in wide precision; (2N)^d is exact in double for practical N.
  MatrixW k = kernel_matrix_wide(spec, nodes, eps / N);
  return k / wide(grid.normalization());
}

Eigen::MatrixXd sinc_matrix(const NodeSet& nodes, double eps) {
  return kernel_matrix(KernelSpec::sinc(), nodes, eps);
}

MatrixW sinc_matrix_wide(const NodeSet& nodes, const wide& eps) {
  return kernel_matrix_wide(KernelSpec::sinc(), nodes, eps);
}

WronskianMatrix wronskian_dirichlet(const SamplingSet& s, int m, double frequency_scale,
                                    GradedOrder order) {
  if (m < 0) throw std::invalid_argument("wronskian_dirichlet: m must be >= 0");
  const int d = s.dim();
  const auto idx = enumerate_indices(d, m, IndexSetKind::total_degree, order);
  const auto p = static_cast<Eigen::Index>(idx.size());

  // moment(gamma) = sum_omega prod_c (scale * omega_c)^{gamma_c}
  std::vector<double> moments_1d;
  if (s.is_full_grid()) {
    moments_1d.assign(static_cast<std::size_t>(2 * m + 1), 0.0);
    for (int k = -s.half_width(); k <= s.half_width(); ++k) {
      double pw = 1.0;
      const double w = frequency_scale * k;
      for (int e = 0; e <= 2 * m; ++e) {
        moments_1d[static_cast<std::size_t>(e)] += pw;
        pw *= w;
      }
    }
  }
  auto moment = [&](const MultiIndex& a, const MultiIndex& b) {
    if (s.is_full_grid()) {
      double prod = 1.0;
      for (int c = 0; c < d; ++c) prod *= moments_1d[static_cast<std::size_t>(a[c] + b[c])];
      return prod;
    }
    const auto& f = s.frequencies();
    double acc = 0.0;
    for (Eigen::Index r = 0; r < f.rows(); ++r) {
      double term = 1.0;
      for (int c = 0; c < d; ++c) term *= std::pow(frequency_scale * f(r, c), a[c] + b[c]);
      acc += term;
    }
    return acc;
  };

  WronskianMatrix w;
  w.degree = m;
  w.dim = d;
  w.source = WronskianSource::dirichlet_finite;
  w.entries.resize(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    const auto& a = idx[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < p; ++j) {
      const auto& b = idx[static_cast<std::size_t>(j)];
      const double weight = factorial_weight(a).value * factorial_weight(b).value;
      w.entries(i, j) = wronskian_phase(a.degree(), b.degree()) * (weight * moment(a, b));
    }
  }
  return w;
}

WronskianMatrix wronskian_limit_gram(int m, int d, GradedOrder order) {
  if (m < 0 || d < 1) throw std::invalid_argument("wronskian_limit_gram: need m >= 0, d >= 1");
  const auto idx = enumerate_indices(d, m, IndexSetKind::total_degree, order);
  const auto p = static_cast<Eigen::Index>(idx.size());
  WronskianMatrix w;
  w.degree = m;
  w.dim = d;
  w.source = WronskianSource::limit_gram;
  w.entries.resize(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    const auto& a = idx[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < p; ++j) {
      const auto& b = idx[static_cast<std::size_t>(j)];
      double integral = 1.0;
      for (int c = 0; c < d; ++c) {
        const int g = a[c] + b[c];
        integral *= (g % 2 == 0) ? 1.0 / (g + 1) : 0.0;
      }
      const double weight = factorial_weight(a).value * factorial_weight(b).value;
      w.entries(i, j) = wronskian_phase(a.degree(), b.degree()) * (weight * integral);
    }
  }
  return w;
}

WronskianMatrix wronskian_finite_difference(const KernelSpec& spec, int m, int d, double h,
                                            GradedOrder order) {
  if (m < 0 || d < 1 || !(h > 0.0))
    throw std::invalid_argument("wronskian_finite_difference: need m >= 0, d >= 1, h > 0");
  const auto idx = enumerate_indices(d, m, IndexSetKind::total_degree, order);
  const auto p = static_cast<Eigen::Index>(idx.size());
  const wide hw(h);

  // Mixed partial d^a_x d^b_y K(0,0) as a tensor product of central
  // difference stencils with offsets (k/2 - j) h.
  auto mixed_partial = [&](const MultiIndex& a, const MultiIndex& b) {
    std::vector<int> orders(static_cast<std::size_t>(2 * d));
    for (int c = 0; c < d; ++c) {
      orders[static_cast<std::size_t>(c)] = a[c];
      orders[static_cast<std::size_t>(d + c)] = b[c];
    }
    std::vector<int> counter(orders.size(), 0);
    wide total = 0;
    std::vector<wide> x(static_cast<std::size_t>(d)), y(static_cast<std::size_t>(d));
    while (true) {
      wide weight = 1;
      for (std::size_t c = 0; c < orders.size(); ++c) {
        const int k = orders[c];
        const int j = counter[c];
        const wide offset = (wide(k) / 2 - j) * hw;
        weight *= wide(static_cast<double>(binomial(k, j))) * ((j % 2) ? -1 : 1);
        if (c < static_cast<std::size_t>(d))
          x[c] = offset;
        else
          y[c - static_cast<std::size_t>(d)] = offset;
      }
      total += weight * spec.evaluate(x, y);
      std::size_t c = 0;
      for (; c < orders.size(); ++c) {
        if (++counter[c] <= orders[c]) break;
        counter[c] = 0;
      }
      if (c == orders.size()) break;
    }
    return total / pow(hw, a.degree() + b.degree());
  };

  WronskianMatrix w;
  w.degree = m;
  w.dim = d;
  w.source = WronskianSource::finite_difference;
  w.entries.resize(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    const auto& a = idx[static_cast<std::size_t>(i)];
    for (Eigen::Index j = i; j < p; ++j) {
      const auto& b = idx[static_cast<std::size_t>(j)];
      const double weight = factorial_weight(a).value * factorial_weight(b).value;
      const double v = to_double(mixed_partial(a, b)) * weight;
      w.entries(i, j) = v;
      w.entries(j, i) = v;
    }
  }
  return w;
}

bool rank_condition_check(const SamplingSet& s, int m, int n, std::optional<double> tol) {
  if (m < 0 || n < 0) throw std::invalid_argument("rank_condition_check: m, n must be >= 0");
  if (s.size() < n) return false;
  const Eigen::MatrixXd v = vandermonde_upto(normalized_coordinates(s.frequencies()), m);
  return numerical_rank(v, tol) >= n;
}

}  // namespace flatlim
