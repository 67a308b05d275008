#include <doctest.h>

#include <algorithm>
#include <set>

#include "flatlim/monomial.hpp"

using namespace flatlim;

namespace {

// All exponent vectors of length d with entries in [0, j], filtered by degree.
std::vector<std::vector<int>> brute_force(int d, int j, bool homogeneous) {
  std::vector<std::vector<int>> out;
  std::vector<int> e(static_cast<std::size_t>(d), 0);
  while (true) {
    int s = 0;
    for (int v : e) s += v;
    if (homogeneous ? s == j : s <= j) out.push_back(e);
    int i = 0;
    while (i < d && ++e[static_cast<std::size_t>(i)] > j) e[static_cast<std::size_t>(i++)] = 0;
    if (i == d) break;
  }
  return out;
}

std::uint64_t factorial(int k) {
  std::uint64_t f = 1;
  for (int i = 2; i <= k; ++i) f *= static_cast<std::uint64_t>(i);
  return f;
}

}  // namespace

TEST_SUITE("monomial") {

TEST_CASE("multi-index basics") {
  MultiIndex a{2, 1, 0};
  CHECK(a.dim() == 3);
  CHECK(a.degree() == 3);
  CHECK_THROWS_AS(MultiIndex({1, -1}), std::invalid_argument);
  CHECK_THROWS_AS(MultiIndex(std::vector<int>{}), std::invalid_argument);
}

TEST_CASE("factorial weights") {
  CHECK(factorial_weight({0, 0}).denominator == 1);
  CHECK(factorial_weight({0, 0}).value == 1.0);
  CHECK(factorial_weight({2, 1}).denominator == 2);
  CHECK(factorial_weight({2, 1}).value == doctest::Approx(0.5));
  CHECK(factorial_weight({3, 3}).denominator == 36);
  CHECK(factorial_weight({3, 3}).exact);

  // Independent product of factorials for every alpha with |alpha| <= 20 in d = 2.
  for (int a = 0; a <= 20; ++a) {
    for (int b = 0; a + b <= 20; ++b) {
      const auto w = factorial_weight({a, b});
      REQUIRE(w.exact);
      CHECK(w.denominator == factorial(a) * factorial(b));
      CHECK(w.value == doctest::Approx(1.0 / (static_cast<double>(factorial(a)) * static_cast<double>(factorial(b)))));
    }
  }
  const auto big = factorial_weight({21, 3});
  CHECK(big.value > 0.0);
  CHECK(big.value < 1e-20);
}

TEST_CASE("enumeration sizes and membership") {
  CHECK(enumerate_indices(2, 2, IndexSetKind::total_degree).size() == 6);
  const auto p0 = enumerate_indices(1, 0, IndexSetKind::total_degree);
  REQUIRE(p0.size() == 1);
  CHECK(p0[0] == MultiIndex{0});
  CHECK(enumerate_indices(3, 2, IndexSetKind::homogeneous).size() == 6);
  CHECK_THROWS_AS(enumerate_indices(0, 2, IndexSetKind::total_degree), std::invalid_argument);
  CHECK_THROWS_AS(enumerate_indices(2, -1, IndexSetKind::total_degree), std::invalid_argument);

  for (auto order : {GradedOrder::grlex, GradedOrder::grevlex}) {
    for (int d = 1; d <= 4; ++d) {
      for (int j = 0; j <= 8; ++j) {
        const auto p = enumerate_indices(d, j, IndexSetKind::total_degree, order);
        const auto h = enumerate_indices(d, j, IndexSetKind::homogeneous, order);
        CHECK(p.size() == binomial(j + d, d));
        CHECK(h.size() == binomial(j + d - 1, d - 1));
        CHECK(p.size() == total_degree_count(d, j));
        CHECK(h.size() == homogeneous_count(d, j));

        std::set<std::vector<int>> ps, oracle;
        for (const auto& a : p) ps.insert(a.exponents());
        for (const auto& e : brute_force(d, j, false)) oracle.insert(e);
        CHECK(ps == oracle);
        CHECK(ps.size() == p.size());

        // P_j = P_{j-1} u H_j, disjoint.
        if (j >= 1) {
          const auto prev = enumerate_indices(d, j - 1, IndexSetKind::total_degree, order);
          std::set<std::vector<int>> uni;
          for (const auto& a : prev) uni.insert(a.exponents());
          for (const auto& a : h) {
            CHECK(uni.count(a.exponents()) == 0);
            uni.insert(a.exponents());
          }
          CHECK(uni == ps);
        }
      }
    }
  }
  CHECK(total_degree_count(2, -1) == 0);
  CHECK(homogeneous_count(2, -1) == 0);
}

TEST_CASE("graded compare examples") {
  CHECK(graded_compare({1, 0}, {0, 1}, GradedOrder::grlex) == std::strong_ordering::less);
  for (auto order : {GradedOrder::grlex, GradedOrder::grevlex})
    CHECK(graded_compare({0, 2}, {1, 0}, order) == std::strong_ordering::greater);
  CHECK(graded_compare({2, 0, 0}, {0, 1, 1}, GradedOrder::grevlex) == std::strong_ordering::less);
  CHECK(graded_compare({1, 1}, {1, 1}) == std::strong_ordering::equal);
  CHECK_THROWS_AS(graded_compare({1, 0}, {1, 0, 0}), std::invalid_argument);

  // The two orders differ first in d = 3, degree 2: x z vs y^2.
  CHECK(graded_compare({1, 0, 1}, {0, 2, 0}, GradedOrder::grlex) == std::strong_ordering::less);
  CHECK(graded_compare({1, 0, 1}, {0, 2, 0}, GradedOrder::grevlex) == std::strong_ordering::greater);
}

TEST_CASE("graded compare is a total order on enumerated sets") {
  for (auto order : {GradedOrder::grlex, GradedOrder::grevlex}) {
    for (int d = 1; d <= 3; ++d) {
      const auto set = enumerate_indices(d, 5, IndexSetKind::total_degree, order);
      const std::size_t n = set.size();
      for (std::size_t i = 0; i < n; ++i) {
        CHECK(graded_compare(set[i], set[i], order) == std::strong_ordering::equal);
        for (std::size_t j = 0; j < n; ++j) {
          const auto ij = graded_compare(set[i], set[j], order);
          const auto ji = graded_compare(set[j], set[i], order);
          CHECK((ij == std::strong_ordering::less) == (ji == std::strong_ordering::greater));
          if (i != j) CHECK(ij != std::strong_ordering::equal);
          // Enumeration is strictly increasing.
          CHECK((ij == std::strong_ordering::less) == (i < j));
          if (set[i].degree() < set[j].degree()) CHECK(ij == std::strong_ordering::less);
        }
      }
      // Transitivity on all triples of a smaller set.
      const auto small = enumerate_indices(d, 3, IndexSetKind::total_degree, order);
      for (const auto& a : small)
        for (const auto& b : small)
          for (const auto& c : small)
            if (graded_compare(a, b, order) < 0 && graded_compare(b, c, order) < 0)
              CHECK(graded_compare(a, c, order) < 0);
    }
  }
}

TEST_CASE("layout in two variables") {
  const auto p = enumerate_indices(2, 3, IndexSetKind::total_degree);
  const std::vector<std::vector<int>> expect = {{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1},
                                                {0, 2}, {3, 0}, {2, 1}, {1, 2}, {0, 3}};
  REQUIRE(p.size() == expect.size());
  for (std::size_t i = 0; i < p.size(); ++i) CHECK(p[i].exponents() == expect[i]);
  CHECK(p.position({1, 1}) == 4);
  CHECK(p.position({4, 0}) == -1);
  CHECK(p.max_degree() == 3);
}

TEST_CASE("custom index sets must be increasing") {
  CHECK_NOTHROW(IndexSet(2, {MultiIndex{0, 0}, MultiIndex{0, 1}}, GradedOrder::grevlex));
  CHECK_THROWS_AS(IndexSet(2, {MultiIndex{0, 1}, MultiIndex{1, 0}}, GradedOrder::grevlex), std::invalid_argument);
  CHECK_THROWS_AS(IndexSet(2, {MultiIndex{0, 1}, MultiIndex{0, 1}}, GradedOrder::grevlex), std::invalid_argument);
}

}
