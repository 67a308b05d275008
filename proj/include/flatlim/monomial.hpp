#pragma once

// Multi-indices, graded monomial orders and the index sets P_j / H_j.
//
// Column layout convention: within a fixed total degree, monomials are
// listed from the largest to the smallest under the underlying (reverse)
// lexicographic order with x_1 > x_2 > ... > x_d, so that for d = 2 the
// layout reads 1 | x y | x^2 xy y^2 | x^3 x^2y xy^2 y^3 | ...
// graded_compare reports `less` for the monomial that comes first.

#include <compare>
#include <cstdint>
#include <initializer_list>
#include <vector>

namespace flatlim {

enum class GradedOrder { grlex, grevlex };

class MultiIndex {
 public:
  explicit MultiIndex(std::vector<int> exponents);
  MultiIndex(std::initializer_list<int> exponents);

  int dim() const { return static_cast<int>(exponents_.size()); }
  int degree() const { return degree_; }
  int operator[](int i) const { return exponents_[static_cast<std::size_t>(i)]; }
  const std::vector<int>& exponents() const { return exponents_; }

  friend bool operator==(const MultiIndex&, const MultiIndex&) = default;

 private:
  std::vector<int> exponents_;
  int degree_ = 0;
};

// 1/alpha!; exact (as 1/denominator) whenever alpha! fits in 64 bits,
// which covers every |alpha| <= 20.
struct FactorialWeight {
  std::uint64_t denominator = 1;
  double value = 1.0;
  bool exact = true;
};

FactorialWeight factorial_weight(const MultiIndex& alpha);

std::strong_ordering graded_compare(const MultiIndex& a, const MultiIndex& b,
                                    GradedOrder order = GradedOrder::grevlex);

enum class IndexSetKind { total_degree, homogeneous, custom };

class IndexSet {
 public:
  // Custom sets must already be strictly increasing under `order`.
  IndexSet(int dim, std::vector<MultiIndex> indices, GradedOrder order,
           IndexSetKind kind = IndexSetKind::custom);

  int dim() const { return dim_; }
  std::size_t size() const { return indices_.size(); }
  bool empty() const { return indices_.empty(); }
  const MultiIndex& operator[](std::size_t i) const { return indices_[i]; }
  auto begin() const { return indices_.begin(); }
  auto end() const { return indices_.end(); }
  GradedOrder order() const { return order_; }
  IndexSetKind kind() const { return kind_; }
  int max_degree() const;

  // Position of alpha, or -1.
  int position(const MultiIndex& alpha) const;

 private:
  int dim_;
  std::vector<MultiIndex> indices_;
  GradedOrder order_;
  IndexSetKind kind_;
};

IndexSet enumerate_indices(int d, int j, IndexSetKind kind,
                           GradedOrder order = GradedOrder::grevlex);

std::uint64_t binomial(int n, int k);

// p_j = C(j+d, d) = |P_j|; zero for j < 0.
std::uint64_t total_degree_count(int d, int j);
// h_j = C(j+d-1, d-1) = |H_j|; zero for j < 0.
std::uint64_t homogeneous_count(int d, int j);

}  // namespace flatlim
