#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include <Eigen/Dense>

#include "flatlim/kernels.hpp"
#include "flatlim/lattice.hpp"
#include "flatlim/random.hpp"

using namespace flatlim;

namespace {

// Explicit cosine sum over {-N..N}^d or {-N+1..N-1}^d.
double grid_sum(int N, int d, const std::vector<double>& u, bool closed = true) {
  const int hw = closed ? N : N - 1;
  std::vector<int> k(static_cast<std::size_t>(d), -hw);
  double acc = 0.0;
  while (true) {
    double phase = 0.0;
    for (int c = 0; c < d; ++c) phase += u[static_cast<std::size_t>(c)] * k[static_cast<std::size_t>(c)];
    acc += std::cos(phase);
    int c = 0;
    while (c < d && ++k[static_cast<std::size_t>(c)] > hw) k[static_cast<std::size_t>(c++)] = -hw;
    if (c == d) break;
  }
  return acc;
}

double max_abs_hermitian_part_diff(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

Eigen::MatrixXd symmetric_list(const Eigen::MatrixXd& half) {
  Eigen::MatrixXd f(2 * half.rows(), half.cols());
  f << half, -half;
  return f;
}

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("sampling sets") {
  const auto g = SamplingSet::full_grid(3, 2);
  CHECK(g.size() == 49);
  CHECK(g.half_width() == 3);
  CHECK(g.normalization() == 36.0);
  const auto o = SamplingSet::full_grid(3, 2, GridConvention::open);
  CHECK(o.size() == 25);
  CHECK(o.half_width() == 2);
  CHECK(o.normalization() == 36.0);

  Eigen::MatrixXd asym(2, 1);
  asym << 1, 2;
  CHECK_THROWS_AS(SamplingSet::from_list(asym), std::invalid_argument);
  Eigen::MatrixXd sym(3, 1);
  sym << 1, 0, -1;
  const auto s = SamplingSet::from_list(sym);
  CHECK(s.normalization() == 1.0);
  CHECK_FALSE(s.is_full_grid());
  CHECK_THROWS_AS(SamplingSet::full_grid(0, 2), std::invalid_argument);
}

TEST_CASE("dirichlet evaluation matches explicit sums") {
  const auto g2 = SamplingSet::full_grid(2, 2);
  const double u0[] = {0.0, 0.0};
  CHECK(dirichlet_eval(g2, u0) == doctest::Approx(25.0));

  const double u[] = {0.3, 0.7};
  const double expect = grid_sum(2, 2, {0.3, 0.7});
  CHECK(dirichlet_eval(g2, u) == doctest::Approx(expect).epsilon(1e-13));
  const double d1a[] = {0.3}, d1b[] = {0.7};
  const auto g1 = SamplingSet::full_grid(2, 1);
  CHECK(dirichlet_eval(g2, u) ==
        doctest::Approx(dirichlet_eval(g1, d1a) * dirichlet_eval(g1, d1b)).epsilon(1e-12));

  // d = 1 closed form sin((N + 1/2) u) / sin(u / 2) against summation.
  for (int N : {1, 5, 40}) {
    const auto s = SamplingSet::full_grid(N, 1);
    for (double x : {1e-9, 1e-3, 0.2, 1.7, -2.9, 6.0}) {
      const double closed = std::sin((N + 0.5) * x) / std::sin(0.5 * x);
      const double xs[] = {x};
      CHECK(dirichlet_eval(s, xs) == doctest::Approx(closed).epsilon(1e-9));
      CHECK(dirichlet_eval(s, xs) == doctest::Approx(grid_sum(N, 1, {x})).epsilon(1e-12));
    }
  }

  // Structured and direct paths agree; open grid as well.
  Rng rng(4);
  for (int t = 0; t < 50; ++t) {
    const int d = 1 + t % 3;
    std::vector<double> v(static_cast<std::size_t>(d));
    for (auto& e : v) e = rng.uniform(-4.0, 4.0);
    for (auto conv : {GridConvention::closed, GridConvention::open}) {
      const auto s = SamplingSet::full_grid(4, d, conv);
      const double a = dirichlet_eval(s, v);
      CHECK(a == doctest::Approx(dirichlet_eval_direct(s, v)).epsilon(1e-12).scale(1.0));
      CHECK(a == doctest::Approx(grid_sum(4, d, v, conv == GridConvention::closed)).epsilon(1e-12).scale(1.0));
      // realness of the complex sum
      CHECK(std::abs(dirichlet_eval_complex(s, v).imag()) <= 1e-12 * s.size());
    }
  }
}

TEST_CASE("wide dirichlet agrees with double") {
  const auto s = SamplingSet::full_grid(3, 2);
  const std::vector<wide> u = {wide("0.25"), wide("-1.5")};
  const double ud[] = {0.25, -1.5};
  CHECK(to_double(dirichlet_eval(s, u)) == doctest::Approx(dirichlet_eval(s, ud)).epsilon(1e-13));
  const std::vector<wide> tiny = {wide("1e-40"), wide("0")};
  CHECK(to_double(dirichlet_eval(s, tiny)) == doctest::Approx(49.0));
}

TEST_CASE("sinc") {
  CHECK(sinc(0.0) == 1.0);
  CHECK(sinc(1e-10) == doctest::Approx(1.0));
  CHECK(sinc(std::numbers::pi) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(sinc(0.5) == doctest::Approx(std::sin(0.5) / 0.5).epsilon(1e-15));
  CHECK(to_double(sinc(wide("1e-20"))) == 1.0);
  CHECK(to_double(sinc(wide("0.5"))) == doctest::Approx(std::sin(0.5) / 0.5).epsilon(1e-15));
}

TEST_CASE("kernel matrices") {
  const auto g = SamplingSet::full_grid(2, 2);
  const auto spec = KernelSpec::dirichlet(g);
  const auto nodes = NodeSet::from_rows({{0, 0}, {1, 0.5}, {-0.3, 2}});
  const auto k0 = kernel_matrix(spec, nodes, 0.0);
  CHECK((k0 - Eigen::MatrixXd::Constant(3, 3, 25.0)).norm() == 0.0);

  const auto k = kernel_matrix(spec, nodes, 0.37);
  CHECK((k - k.transpose()).norm() == 0.0);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const Eigen::RowVectorXd diff = 0.37 * (nodes.point(i) - nodes.point(j));
      CHECK(k(i, j) == doctest::Approx(grid_sum(2, 2, {diff(0), diff(1)})).epsilon(1e-12));
    }
  const auto one = kernel_matrix(spec, NodeSet::from_rows({{0.4, -0.2}}), 2.0);
  CHECK(one.rows() == 1);
  CHECK(one(0, 0) == doctest::Approx(25.0));

  const auto pair = NodeSet::from_rows({{0.0}, {1.3}});
  const auto s = sinc_matrix(pair, 0.8);
  CHECK(s(0, 1) == doctest::Approx(std::sin(0.8 * 1.3) / (0.8 * 1.3)).epsilon(1e-15));
  CHECK(s(0, 0) == 1.0);
  const auto s0 = sinc_matrix(nodes, 0.0);
  CHECK((s0 - Eigen::MatrixXd::Ones(3, 3)).norm() == 0.0);
  const auto piv = NodeSet::from_rows({{0, 0}, {std::numbers::pi, std::numbers::pi / 2}});
  CHECK(std::abs(sinc_matrix(piv, 1.0)(0, 1)) < 1e-15);
  CHECK_THROWS_AS(kernel_matrix(spec, nodes, -1.0), std::invalid_argument);

  // Wide assembly agrees with double.
  const MatrixW kw = kernel_matrix_wide(spec, nodes, wide("0.37"));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(to_double(kw(i, j)) == doctest::Approx(k(i, j)).epsilon(1e-13));
}

TEST_CASE("normalized dirichlet matrix") {
  for (int d = 1; d <= 2; ++d) {
    const int N = 7;
    Eigen::MatrixXd p = Eigen::MatrixXd::Random(3, d);
    const NodeSet nodes(p);
    const auto k0 = dirichlet_matrix_normalized(nodes, N, 0.0);
    const double c = std::pow((2.0 * N + 1) / (2.0 * N), d);
    CHECK((k0.array() - c).abs().maxCoeff() < 1e-14);
    const auto k = dirichlet_matrix_normalized(nodes, N, 0.9);
    const MatrixW kw = dirichlet_matrix_normalized_wide(nodes, N, wide("0.9"));
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const Eigen::RowVectorXd diff = 0.9 * (nodes.point(i) - nodes.point(j)) / N;
        std::vector<double> u(diff.data(), diff.data() + d);
        const double expect = grid_sum(N, d, u) / std::pow(2.0 * N, d);
        CHECK(k(i, j) == doctest::Approx(expect).epsilon(1e-12));
        CHECK(to_double(kw(i, j)) == doctest::Approx(expect).epsilon(1e-12));
      }
  }
  const auto pair = NodeSet::from_rows({{0.0}, {1.1}});
  const auto k = dirichlet_matrix_normalized(pair, 50, 0.5);
  CHECK(std::abs(k(0, 1) - sinc(0.5 * 1.1)) < 1e-2);
}

TEST_CASE("dirichlet Wronskian") {
  const auto g = SamplingSet::full_grid(2, 2);
  const auto w = wronskian_dirichlet(g, 2);
  CHECK(w.entries.rows() == 6);
  CHECK(w.entries(0, 0).real() == doctest::Approx(25.0));
  CHECK(max_abs_hermitian_part_diff(w.entries, w.entries.adjoint()) < 1e-12);

  // Independent sum: W_ab = i^|a| (-i)^|b| / (a! b!) sum_w w^(a+b).
  const auto idx = enumerate_indices(2, 2, IndexSetKind::total_degree);
  const auto& f = g.frequencies();
  const std::complex<double> I(0, 1);
  for (std::size_t a = 0; a < idx.size(); ++a) {
    for (std::size_t b = 0; b < idx.size(); ++b) {
      std::complex<double> acc = 0.0;
      for (Eigen::Index r = 0; r < f.rows(); ++r) {
        std::complex<double> term = 1.0;
        for (int c = 0; c < 2; ++c)
          term *= std::pow(I * f(r, c), idx[a][c]) * std::pow(-I * f(r, c), idx[b][c]) /
                  std::tgamma(idx[a][c] + 1.0) / std::tgamma(idx[b][c] + 1.0);
        acc += term;
      }
      CHECK(std::abs(w.entries(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) - acc) < 1e-11);
    }
  }

  // PSD for random symmetric lists and full grids.
  Rng rng(17);
  for (int t = 0; t < 10; ++t) {
    const int d = 1 + t % 2;
    Eigen::MatrixXd half(5, d);
    for (int i = 0; i < 5; ++i)
      for (int c = 0; c < d; ++c) half(i, c) = std::round(rng.uniform(-4.0, 4.0));
    half(0, 0) += 0.5;  // avoid an exactly zero row colliding with its mirror
    const auto s = SamplingSet::from_list(symmetric_list(half));
    for (int m = 0; m <= 3; ++m) {
      const auto wm = wronskian_dirichlet(s, m);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(wm.entries);
      CHECK(es.eigenvalues().minCoeff() >= -1e-10 * wm.entries.trace().real());
      // rank(W) = rank(V_{<=m}(S))
      const int rv = numerical_rank(vandermonde_upto(s.frequencies(), m), 1e-9);
      int rw = 0;
      for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
        if (es.eigenvalues()(i) > 1e-9 * es.eigenvalues().maxCoeff()) ++rw;
      CHECK(rw == rv);
    }
  }
}

TEST_CASE("Wronskian on a symmetrized principal lattice is full rank") {
  for (int d = 1; d <= 2; ++d) {
    for (int ell = 1; ell <= 3; ++ell) {
      const auto lat = principal_lattice(ell, d, true);
      const Eigen::MatrixXd pts = lat.nodes.points();
      // Union of A(l,d) and its mirror, duplicates removed.
      std::vector<Eigen::RowVectorXd> rows;
      auto add = [&](const Eigen::RowVectorXd& r) {
        for (const auto& q : rows)
          if ((q - r).norm() == 0.0) return;
        rows.push_back(r);
      };
      for (Eigen::Index i = 0; i < pts.rows(); ++i) {
        add(pts.row(i));
        add(-pts.row(i));
      }
      Eigen::MatrixXd f(static_cast<Eigen::Index>(rows.size()), d);
      for (std::size_t i = 0; i < rows.size(); ++i) f.row(static_cast<Eigen::Index>(i)) = rows[i];
      const auto s = SamplingSet::from_list(f);
      const auto w = wronskian_dirichlet(s, ell);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(w.entries);
      const auto& ev = es.eigenvalues();
      CHECK(ev.minCoeff() > 1e-10 * ev.maxCoeff());
      CHECK(static_cast<std::uint64_t>(w.entries.rows()) == total_degree_count(d, ell));
    }
  }
}

TEST_CASE("limit Gram matrix") {
  const auto w = wronskian_limit_gram(2, 2);
  CHECK(w.entries(0, 0).real() == doctest::Approx(1.0));
  const auto idx = enumerate_indices(2, 2, IndexSetKind::total_degree);
  for (std::size_t a = 0; a < idx.size(); ++a)
    for (std::size_t b = 0; b < idx.size(); ++b)
      if ((idx[a].degree() + idx[b].degree()) % 2 == 1)
        CHECK(std::abs(w.entries(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b))) == 0.0);

  for (int d = 1; d <= 3; ++d) {
    for (int m = 0; m <= 5; ++m) {
      const auto g = wronskian_limit_gram(m, d);
      CHECK((g.entries.imag()).norm() == 0.0);
      CHECK((g.entries - g.entries.transpose()).norm() == 0.0);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g.entries.real());
      CHECK(es.eigenvalues().minCoeff() > 0.0);
    }
  }

  // Riemann sums: (2N)^{-d} W_N -> limit Gram.
  const int N = 1000;
  const auto wn = wronskian_dirichlet(SamplingSet::full_grid(N, 2), 2, 1.0 / N);
  const Eigen::MatrixXcd scaled = wn.entries / std::pow(2.0 * N, 2);
  CHECK((scaled - w.entries).cwiseAbs().maxCoeff() < 1e-2);
}

TEST_CASE("finite-difference Wronskians") {
  // Dirichlet kernel: moments against central differences of the closed
  // form. Truncation error is ~h^2 max|omega|^2, so the stencil (evaluated
  // in wide precision) uses h = 1e-5.
  for (int d = 1; d <= 2; ++d) {
    const auto g = SamplingSet::full_grid(3, d);
    for (int m = 0; m <= 2; ++m) {
      const auto exact = wronskian_dirichlet(g, m);
      const auto fd = wronskian_finite_difference(KernelSpec::dirichlet(g), m, d, 1e-5);
      const double scale = exact.entries.cwiseAbs().maxCoeff();
      CHECK((fd.entries - exact.entries).cwiseAbs().maxCoeff() <= 1e-6 * scale);
    }
  }
  // sinc(x - y) = 1/2 int_{-1}^{1} exp(i t (x - y)) dt, so its Wronskian is the limit Gram matrix.
  for (int d = 1; d <= 2; ++d) {
    const auto fd = wronskian_finite_difference(KernelSpec::sinc(), 2, d);
    const auto gram = wronskian_limit_gram(2, d);
    CHECK((fd.entries - gram.entries).cwiseAbs().maxCoeff() < 1e-6);
  }
  // Gaussian exp(-(x-y)^2) in d = 1: d^a_x d^b_y at 0 = (-1)^b h^(a+b)(0),
  // h^(2k)(0) = (-1)^k (2k)!/k!.
  CustomKernel gauss;
  gauss.name = "gauss";
  gauss.eval = [](std::span<const double> x, std::span<const double> y) {
    return std::exp(-(x[0] - y[0]) * (x[0] - y[0]));
  };
  const auto fd = wronskian_finite_difference(KernelSpec::custom(gauss), 1, 1);
  auto oracle = [](int a, int b) {
    const int s = a + b;
    if (s % 2) return 0.0;
    const int k = s / 2;
    const double hk = ((k % 2) ? -1.0 : 1.0) * std::tgamma(2.0 * k + 1) / std::tgamma(k + 1.0);
    return ((b % 2) ? -1.0 : 1.0) * hk / std::tgamma(a + 1.0) / std::tgamma(b + 1.0);
  };
  for (int a = 0; a <= 1; ++a)
    for (int b = 0; b <= 1; ++b) CHECK(fd.entries(a, b).real() == doctest::Approx(oracle(a, b)).epsilon(1e-5));
  CHECK(fd.source == WronskianSource::finite_difference);
}

TEST_CASE("rank condition") {
  Eigen::MatrixXd two(2, 1);
  two << 1, -1;
  CHECK_FALSE(rank_condition_check(SamplingSet::from_list(two), 3, 3));
  Eigen::MatrixXd five(5, 1);
  five << -2, -1, 0, 1, 2;
  CHECK(rank_condition_check(SamplingSet::from_list(five), 4, 5));
  CHECK_FALSE(rank_condition_check(SamplingSet::from_list(five), 3, 5));
  // G_N, N >= l, p_{l-1} < n <= p_l, m >= l.
  CHECK(rank_condition_check(SamplingSet::full_grid(2, 2), 2, 6));
  CHECK(rank_condition_check(SamplingSet::full_grid(2, 2), 3, 6));
  // A set confined to a line only supports rank m + 1.
  Eigen::MatrixXd line(5, 2);
  line << -2, -2, -1, -1, 0, 0, 1, 1, 2, 2;
  CHECK_FALSE(rank_condition_check(SamplingSet::from_list(line), 3, 6));
}

}
