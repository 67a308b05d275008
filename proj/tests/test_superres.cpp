#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <Eigen/Dense>

#include "flatlim/errors.hpp"
#include "flatlim/geometry.hpp"
#include "flatlim/random.hpp"
#include "flatlim/superres.hpp"

using namespace flatlim;

namespace {

Eigen::RowVectorXd row(std::initializer_list<double> v) {
  Eigen::RowVectorXd r(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) r(i++) = x;
  return r;
}

SpikeSignal random_signal(int n, int d, double spread, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd x(n, d);
  Eigen::VectorXcd a(n);
  for (int j = 0; j < n; ++j) {
    for (int c = 0; c < d; ++c) x(j, c) = rng.uniform(-spread, spread);
    a(j) = std::polar(rng.uniform(0.5, 1.5), rng.uniform(-3.0, 3.0));
  }
  return SpikeSignal(x, a);
}

// Bottleneck value by exhaustive search over permutations.
double brute_force_bottleneck(const Eigen::MatrixXd& t, const Eigen::MatrixXd& e) {
  std::vector<int> perm(static_cast<std::size_t>(t.rows()));
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double worst = 0.0;
    for (Eigen::Index j = 0; j < t.rows(); ++j)
      worst = std::max(worst, wrap_distance(t.row(j), e.row(perm[static_cast<std::size_t>(j)])));
    best = std::min(best, worst);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace

TEST_SUITE("superres") {

TEST_CASE("wrap distance and torus reduction") {
  CHECK(wrap_distance(row({0.4, -1.0}), row({0.4, -1.0})) == 0.0);
  CHECK(wrap_distance(row({std::numbers::pi - 0.1}), row({-std::numbers::pi + 0.1})) == doctest::Approx(0.2));
  CHECK(wrap_distance(row({3, 3}), row({-3, 0})) == doctest::Approx(std::max(2 * std::numbers::pi - 6, 3.0)));
  Eigen::MatrixXd p(1, 3);
  p << 7.0, -4.0, std::numbers::pi;
  const auto w = wrap_to_torus(p);
  CHECK(w(0, 0) == doctest::Approx(7.0 - 2 * std::numbers::pi));
  CHECK(w(0, 1) == doctest::Approx(-4.0 + 2 * std::numbers::pi));
  CHECK(w(0, 2) == doctest::Approx(-std::numbers::pi));
}

TEST_CASE("cluster check") {
  Eigen::MatrixXd two(2, 2);
  two << 0, 0, 0.1, 0.05;
  CHECK(cluster_check(two, {0.1, 2.0, 2}));
  CHECK_FALSE(cluster_check(two, {0.11, 2.0, 2}));
  CHECK_FALSE(cluster_check(two, {0.04, 2.0, 2}));
  CHECK_THROWS_AS(cluster_check(two, {0.1, 1.0, 2}), std::invalid_argument);

  GeometrySpec g;
  g.n = 5;
  g.seed = 4;
  const auto y = make_geometry(g);
  REQUIRE(y.min_separation() == doctest::Approx(1.0));
  double diam = 0.0;
  for (int i = 0; i < y.size(); ++i)
    for (int j = 0; j < y.size(); ++j) diam = std::max(diam, (y.point(i) - y.point(j)).lpNorm<Eigen::Infinity>());
  const double delta = 0.01;
  CHECK(cluster_check(y.points() * delta, {delta, diam, 5}));
  CHECK_FALSE(cluster_check(y.points() * delta, {delta, 0.9 * diam, 5}));
}

TEST_CASE("measurements") {
  const auto grid = SamplingSet::full_grid(4, 2);
  SUBCASE("single spike at the origin") {
    const SpikeSignal s(Eigen::MatrixXd::Zero(1, 2), Eigen::VectorXcd::Ones(1));
    const auto m = fourier_measurements(s, grid, 0.0, 1);
    CHECK((m.values.array() - 1.0).abs().maxCoeff() == 0.0);
  }
  SUBCASE("linearity and the Vandermonde identity") {
    const auto f = random_signal(3, 2, 1.0, 2), g = random_signal(2, 2, 1.0, 3);
    Eigen::MatrixXd x(5, 2);
    x << f.nodes, g.nodes;
    Eigen::VectorXcd a(5);
    a << f.coefficients, g.coefficients;
    const auto mf = fourier_measurements(f, grid, 0.0, 1);
    const auto mg = fourier_measurements(g, grid, 0.0, 1);
    const auto mfg = fourier_measurements(SpikeSignal(x, a), grid, 0.0, 1);
    CHECK((mfg.values - mf.values - mg.values).cwiseAbs().maxCoeff() < 1e-12);
    // explicit sum over frequencies
    const auto& w = grid.frequencies();
    for (Eigen::Index k = 0; k < w.rows(); ++k) {
      std::complex<double> acc = 0.0;
      for (int j = 0; j < 3; ++j) acc += f.coefficients(j) * std::polar(1.0, w.row(k).dot(f.nodes.row(j)));
      CHECK(std::abs(mf.values(k) - acc) < 1e-12);
    }
  }
  SUBCASE("bounded, seeded noise") {
    const auto s = random_signal(3, 2, 1.0, 4);
    const auto a = fourier_measurements(s, grid, 1e-3, 77);
    const auto b = fourier_measurements(s, grid, 1e-3, 77);
    const auto c = fourier_measurements(s, grid, 1e-3, 78);
    CHECK(a.noise.cwiseAbs().maxCoeff() <= 1e-3);
    CHECK(a.noise.cwiseAbs().maxCoeff() > 5e-4);
    CHECK((a.values - b.values).norm() == 0.0);
    CHECK((a.values - c.values).norm() > 0.0);
    const auto clean = fourier_measurements(s, grid, 0.0, 77);
    CHECK((a.values - clean.values - a.noise).cwiseAbs().maxCoeff() < 1e-15);
    const auto wide_m = fourier_measurements(s, grid, 1e-3, 77, true);
    REQUIRE(wide_m.values_wide.size() == grid.size());
    for (Eigen::Index k = 0; k < grid.size(); ++k) {
      CHECK(std::abs(to_double(wide_m.values_wide(k).real()) - a.values(k).real()) < 1e-13);
      CHECK(std::abs(to_double(wide_m.values_wide(k).imag()) - a.values(k).imag()) < 1e-13);
    }
  }
  CHECK_THROWS_AS(SpikeSignal(Eigen::MatrixXd::Zero(2, 2), Eigen::VectorXcd::Ones(2)), std::invalid_argument);
  CHECK_THROWS_AS(SpikeSignal(Eigen::MatrixXd::Ones(1, 2), Eigen::VectorXcd::Zero(1)), std::invalid_argument);
}

TEST_CASE("complex Vandermonde and the Gramian identity") {
  for (int d = 1; d <= 2; ++d) {
    const auto grid = SamplingSet::full_grid(6, d);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto s = random_signal(4, d, 1.0, seed);
      const auto u = complex_vandermonde(s.nodes, grid);
      const Eigen::MatrixXcd g = u.adjoint() * u;
      const auto dmat = kernel_matrix(KernelSpec::dirichlet(grid), NodeSet(s.nodes), 1.0);
      CHECK((g - dmat.cast<std::complex<double>>()).cwiseAbs().maxCoeff() < 1e-10 * grid.size());
      Eigen::JacobiSVD<Eigen::MatrixXcd> svd(u);
      const auto ev = eigenvalues_sym(dmat);
      for (int k = 0; k < 4; ++k)
        CHECK(svd.singularValues()(k) * svd.singularValues()(k) == doctest::Approx(ev[static_cast<std::size_t>(k)]).epsilon(1e-9).scale(1e-9 * grid.size()));
    }
  }
  const auto grid = SamplingSet::full_grid(3, 2);
  const auto u1 = complex_vandermonde(row({0.3, -0.2}), grid);
  CHECK((u1.cwiseAbs().array() - 1.0).abs().maxCoeff() < 1e-15);
  CHECK(u1.norm() == doctest::Approx(std::sqrt(grid.size())));
}

TEST_CASE("singular value scaling") {
  const auto delta = geometric_grid(0.05 / 20, 1e-3 / 20, 12);
  GeometrySpec g;
  g.kind = GeometryKind::line;
  g.n = 3;
  const auto line = singular_scaling_fit(make_geometry(g), 20, delta);
  REQUIRE(line.report.groups.size() == 3);
  for (const auto& grp : line.report.groups) CHECK(std::abs(grp.fitted_slope - grp.predicted_exponent) < 0.2);
  CHECK(line.sigma_min_sq_exponent == doctest::Approx(4.0).epsilon(0.05));

  g.kind = GeometryKind::random;
  g.n = 6;
  g.seed = 1;
  const auto gen = singular_scaling_fit(make_geometry(g), 20, delta);
  std::vector<int> expect = {0, 2, 2, 4, 4, 4};
  std::vector<double> got;
  for (const auto& grp : gen.report.groups)
    for (double s : grp.member_slopes) got.push_back(s);
  REQUIRE(got.size() == 6);
  for (std::size_t k = 0; k < 6; ++k) CHECK(std::abs(got[k] - expect[k]) < 0.3);

  const auto one = singular_scaling_fit(NodeSet::from_rows({{0.0, 0.0}}), 10, geometric_grid(0.01, 0.001, 6));
  for (const auto& ev : one.report.eigenvalues) CHECK(ev[0] == doctest::Approx(441.0 / 400.0));
}

TEST_CASE("kappa and matching") {
  const auto t = random_signal(4, 2, 1.0, 9);
  CHECK(error_kappa(t, t, 1e-3) == 0.0);
  SpikeSignal off = t;
  off.nodes(2, 1) += 2e-4;
  CHECK(error_kappa(t, off, 1e-3) == doctest::Approx(0.2));
  const std::vector<int> order = {2, 0, 3, 1};
  Eigen::MatrixXd p(4, 2);
  for (int j = 0; j < 4; ++j) p.row(j) = t.nodes.row(order[static_cast<std::size_t>(j)]);
  const SpikeSignal perm(p, Eigen::VectorXcd::Ones(4));
  CHECK(error_kappa(t, perm, 1e-3) == 0.0);
  const auto m = optimal_matching(t.nodes, perm.nodes);
  for (int j = 0; j < 4; ++j) CHECK(order[static_cast<std::size_t>(m.assignment[static_cast<std::size_t>(j)])] == j);

  Rng rng(12);
  for (int n = 1; n <= 6; ++n) {
    for (int trial = 0; trial < 15; ++trial) {
      Eigen::MatrixXd a(n, 2), b(n, 2);
      for (int j = 0; j < n; ++j)
        for (int c = 0; c < 2; ++c) {
          a(j, c) = rng.uniform(-3.0, 3.0);
          b(j, c) = rng.uniform(-3.0, 3.0);
        }
      const auto mt = optimal_matching(a, b);
      CHECK(mt.max_distance == doctest::Approx(brute_force_bottleneck(a, b)).epsilon(1e-15));
      std::vector<int> seen(static_cast<std::size_t>(n), 0);
      double worst = 0.0;
      for (int j = 0; j < n; ++j) {
        ++seen[static_cast<std::size_t>(mt.assignment[static_cast<std::size_t>(j)])];
        worst = std::max(worst, wrap_distance(a.row(j), b.row(mt.assignment[static_cast<std::size_t>(j)])));
      }
      CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
      CHECK(worst == mt.max_distance);
    }
  }
}

TEST_CASE("NLS Jacobian against central differences") {
  Rng rng(31);
  for (int trial = 0; trial < 5; ++trial) {
    const int d = 1 + trial % 2;
    const auto s = random_signal(3, d, 0.5, 40 + static_cast<std::uint64_t>(trial));
    const auto meas = fourier_measurements(s, SamplingSet::full_grid(3, d), 0.01, 5);
    const NlsProblem prob(meas, 3);
    Eigen::VectorXd p = prob.pack(s);
    for (Eigen::Index i = 0; i < p.size(); ++i) p(i) += rng.uniform(-0.05, 0.05);
    const Eigen::MatrixXd j = prob.jacobian(p);
    const double h = 1e-6;
    Eigen::MatrixXd fd(j.rows(), j.cols());
    for (Eigen::Index c = 0; c < p.size(); ++c) {
      Eigen::VectorXd a = p, b = p;
      a(c) += h;
      b(c) -= h;
      fd.col(c) = (prob.residual(a) - prob.residual(b)) / (2 * h);
    }
    CHECK((j - fd).norm() <= 1e-5 * j.norm());
    // pack / unpack round trip
    CHECK((prob.pack(prob.unpack(p)) - p).norm() == 0.0);
  }
}

TEST_CASE("NLS recovery") {
  const auto grid = SamplingSet::full_grid(10, 2, GridConvention::open);
  const auto s = random_signal(3, 2, 0.3, 51);
  SUBCASE("zero noise at truth is stationary") {
    const auto meas = fourier_measurements(s, grid, 0.0, 1);
    const auto r = nls_recover(meas, 3, s, {}, &s);
    CHECK(r.converged);
    CHECK(r.max_node_error < 1e-14);
  }
  SUBCASE("descent, determinism and bounded error") {
    const auto meas = fourier_measurements(s, grid, 1e-4, 2);
    SpikeSignal init = s;
    init.nodes.array() += 0.01;
    const auto r = nls_recover(meas, 3, init, {}, &s);
    const auto r2 = nls_recover(meas, 3, init, {}, &s);
    CHECK(r.converged);
    for (std::size_t i = 1; i < r.cost_history.size(); ++i) CHECK(r.cost_history[i] <= r.cost_history[i - 1]);
    CHECK(r.max_node_error < 1e-2);
    CHECK(r.kappa == doctest::Approx(r.max_node_error / 1e-4));
    CHECK((r.estimate.nodes - r2.estimate.nodes).norm() == 0.0);
    CHECK(r.iterations == r2.iterations);
  }
  SUBCASE("iteration cap is reported") {
    const auto meas = fourier_measurements(s, grid, 1e-4, 2);
    SpikeSignal init = s;
    init.nodes.array() += 0.05;
    NlsOptions o;
    o.max_iters = 1;
    o.polish_steps = 0;
    const auto r = nls_recover(meas, 3, init, o, &s);
    CHECK_FALSE(r.converged);
    CHECK(r.diagnostic.find("no convergence") != std::string::npos);
  }
}

TEST_CASE("ESPRIT") {
  const auto grid = SamplingSet::full_grid(20, 2);
  SUBCASE("noise-free generic spikes") {
    for (int n = 1; n <= 4; ++n) {
      for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const auto s = random_signal(n, 2, 2.5, 100 * seed + static_cast<std::uint64_t>(n));
        if (n >= 2 && NodeSet(s.nodes).min_separation() < 0.2) continue;
        const auto r = esprit_2d(fourier_measurements(s, grid, 0.0, 1), n, {}, &s);
        CHECK(r.max_node_error < 1e-8);
        for (int j = 0; j < n; ++j) {
          const int e = r.matching.assignment[static_cast<std::size_t>(j)];
          CHECK(std::abs(r.estimate.coefficients(e) - s.coefficients(j)) < 1e-7);
        }
      }
    }
  }
  SUBCASE("single spike") {
    const SpikeSignal s(row({1.2, -0.4}), Eigen::VectorXcd::Constant(1, {0.5, 0.5}));
    const auto r = esprit_2d(fourier_measurements(s, grid, 1e-20, 3), 1, {}, &s);
    CHECK(r.max_node_error < 1e-13);
  }
  SUBCASE("extended precision path") {
    const SpikeSignal s(Eigen::MatrixXd(make_geometry({GeometryKind::random, 2, 2, {}, 1}).points() * 0.05),
                        Eigen::VectorXcd::Ones(2));
    const auto meas = fourier_measurements(s, grid, 1e-20, 7, true);
    EspritParams prm;
    prm.extended_precision = true;
    const auto r = esprit_2d(meas, 2, prm, &s);
    REQUIRE(r.nodes_wide.rows() == 2);
    CHECK(r.max_node_error < 1e-16);
    CHECK(r.max_node_error > 0.0);
    // the double path is limited by rounding of the samples
    const auto rd = esprit_2d(meas, 2, {}, &s);
    CHECK(rd.max_node_error > r.max_node_error);
    prm.extended_precision = true;
    CHECK_THROWS_AS(esprit_2d(fourier_measurements(s, grid, 1e-20, 7), 2, prm, &s), std::invalid_argument);
  }
  SUBCASE("parameter validation") {
    const auto s = random_signal(2, 2, 1.0, 3);
    const auto meas = fourier_measurements(s, grid, 0.0, 1);
    EspritParams big;
    big.M1 = 50;
    CHECK_THROWS_AS(esprit_2d(meas, 2, big), std::invalid_argument);
    EspritParams tiny;
    tiny.L1 = 1;
    CHECK_THROWS_AS(esprit_2d(meas, 2, tiny), std::invalid_argument);
    CHECK_THROWS_AS(esprit_2d(fourier_measurements(random_signal(2, 1, 1.0, 3), SamplingSet::full_grid(20, 1), 0.0, 1), 2),
                    std::invalid_argument);
  }
}

TEST_CASE("slope fit") {
  std::vector<double> x, y, c, j;
  Rng rng(3);
  for (int i = 0; i < 10; ++i) {
    const double v = 0.01 * std::pow(1.5, i);
    x.push_back(v);
    y.push_back(v * v);
    c.push_back(2.5);
    j.push_back(3.0 * std::pow(v, 4.5) * (1.0 + 0.01 * rng.uniform(-1.0, 1.0)));
  }
  const auto f = slope_fit(x, y);
  CHECK(f.slope == doctest::Approx(2.0));
  CHECK(f.r_squared == doctest::Approx(1.0));
  CHECK(std::abs(slope_fit(x, c).slope) < 1e-12);
  CHECK(std::abs(slope_fit(x, j).slope - 4.5) < 0.1);
  CHECK_THROWS_AS(slope_fit({1, 2, 3}, {1, 2, 3}), std::invalid_argument);
  CHECK_THROWS_AS(slope_fit({1, 2, 3, 4}, {1, -2, 3, 4}), std::invalid_argument);
}

}
