#include "flatlim/monomial.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace flatlim {

MultiIndex::MultiIndex(std::vector<int> exponents) : exponents_(std::move(exponents)) {
  if (exponents_.empty()) throw std::invalid_argument("MultiIndex: dimension must be >= 1");
  for (int e : exponents_) {
    if (e < 0) throw std::invalid_argument("MultiIndex: negative exponent");
  }
  degree_ = std::accumulate(exponents_.begin(), exponents_.end(), 0);
}

MultiIndex::MultiIndex(std::initializer_list<int> exponents)
    : MultiIndex(std::vector<int>(exponents)) {}

FactorialWeight factorial_weight(const MultiIndex& alpha) {
  FactorialWeight w;
  constexpr std::uint64_t limit = std::numeric_limits<std::uint64_t>::max();
  double value = 1.0;
  for (int e : alpha.exponents()) {
    for (int k = 2; k <= e; ++k) {
      value /= k;
      const auto uk = static_cast<std::uint64_t>(k);
      if (w.exact && w.denominator > limit / uk) w.exact = false;
      if (w.exact) w.denominator *= uk;
    }
  }
  if (!w.exact) w.denominator = 0;
  w.value = w.exact ? 1.0 / static_cast<double>(w.denominator) : value;
  return w;
}

std::strong_ordering graded_compare(const MultiIndex& a, const MultiIndex& b, GradedOrder order) {
  if (a.dim() != b.dim()) throw std::invalid_argument("graded_compare: dimension mismatch");
  if (a.degree() != b.degree()) return a.degree() <=> b.degree();
  const int d = a.dim();
  if (order == GradedOrder::grlex) {
    for (int i = 0; i < d; ++i) {
      if (a[i] != b[i]) return b[i] <=> a[i];
    }
  } else {
    for (int i = d - 1; i >= 0; --i) {
      if (a[i] != b[i]) return a[i] <=> b[i];
    }
  }
  return std::strong_ordering::equal;
}

IndexSet::IndexSet(int dim, std::vector<MultiIndex> indices, GradedOrder order, IndexSetKind kind)
    : dim_(dim), indices_(std::move(indices)), order_(order), kind_(kind) {
  if (dim_ < 1) throw std::invalid_argument("IndexSet: dimension must be >= 1");
  for (std::size_t i = 0; i < indices_.size(); ++i) {
    if (indices_[i].dim() != dim_) throw std::invalid_argument("IndexSet: dimension mismatch");
    if (i > 0 && graded_compare(indices_[i - 1], indices_[i], order_) != std::strong_ordering::less)
      throw std::invalid_argument("IndexSet: indices must be strictly increasing");
  }
}

int IndexSet::max_degree() const {
  int m = -1;
  for (const auto& a : indices_) m = std::max(m, a.degree());
  return m;
}

int IndexSet::position(const MultiIndex& alpha) const {
  auto it = std::lower_bound(indices_.begin(), indices_.end(), alpha,
                             [this](const MultiIndex& x, const MultiIndex& y) {
                               return graded_compare(x, y, order_) == std::strong_ordering::less;
                             });
  if (it != indices_.end() && *it == alpha) return static_cast<int>(it - indices_.begin());
  return -1;
}

namespace {

void compositions(int remaining, int slot, std::vector<int>& current,
                  std::vector<MultiIndex>& out) {
  const int d = static_cast<int>(current.size());
  if (slot == d - 1) {
    current[static_cast<std::size_t>(slot)] = remaining;
    out.emplace_back(current);
    return;
  }
  for (int e = remaining; e >= 0; --e) {
    current[static_cast<std::size_t>(slot)] = e;
    compositions(remaining - e, slot + 1, current, out);
  }
}

std::vector<MultiIndex> homogeneous_layer(int d, int degree, GradedOrder order) {
  std::vector<MultiIndex> layer;
  std::vector<int> current(static_cast<std::size_t>(d), 0);
  compositions(degree, 0, current, layer);
  std::sort(layer.begin(), layer.end(), [order](const MultiIndex& a, const MultiIndex& b) {
    return graded_compare(a, b, order) == std::strong_ordering::less;
  });
  return layer;
}

}  // namespace

IndexSet enumerate_indices(int d, int j, IndexSetKind kind, GradedOrder order) {
  if (d < 1) throw std::invalid_argument("enumerate_indices: d must be >= 1");
  if (j < 0) throw std::invalid_argument("enumerate_indices: j must be >= 0");
  if (kind == IndexSetKind::custom)
    throw std::invalid_argument("enumerate_indices: kind must be total_degree or homogeneous");

  std::vector<MultiIndex> all;
  const int first = kind == IndexSetKind::total_degree ? 0 : j;
  for (int k = first; k <= j; ++k) {
    auto layer = homogeneous_layer(d, k, order);
    all.insert(all.end(), std::make_move_iterator(layer.begin()),
               std::make_move_iterator(layer.end()));
  }
  return IndexSet(d, std::move(all), order, kind);
}

std::uint64_t binomial(int n, int k) {
  if (k < 0 || n < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) {
    r = r * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
  }
  return r;
}

std::uint64_t total_degree_count(int d, int j) { return j < 0 ? 0 : binomial(j + d, d); }

std::uint64_t homogeneous_count(int d, int j) { return j < 0 ? 0 : binomial(j + d - 1, d - 1); }

}  // namespace flatlim
