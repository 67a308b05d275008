#include "flatlim/vandermonde.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/SVD>

#include "flatlim/errors.hpp"

namespace flatlim {

NodeSet::NodeSet(Eigen::MatrixXd points, std::string label)
    : points_(std::move(points)), label_(std::move(label)) {
  if (points_.rows() > 0 && points_.cols() < 1)
    throw std::invalid_argument("NodeSet: dimension must be >= 1");
  if (!points_.allFinite()) throw std::invalid_argument("NodeSet: non-finite coordinate");
}

NodeSet NodeSet::from_rows(const std::vector<std::vector<double>>& rows, std::string label) {
  if (rows.empty()) return NodeSet(Eigen::MatrixXd(0, 1), std::move(label));
  const auto d = rows.front().size();
  Eigen::MatrixXd p(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != d) throw std::invalid_argument("NodeSet: ragged point list");
    for (std::size_t j = 0; j < d; ++j)
      p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return NodeSet(std::move(p), std::move(label));
}

double NodeSet::min_separation() const {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < size(); ++i)
    for (int j = i + 1; j < size(); ++j)
      best = std::min(best, (points_.row(i) - points_.row(j)).lpNorm<Eigen::Infinity>());
  return best;
}

NodeSet NodeSet::scaled(double c) const { return NodeSet(c * points_, label_); }

NodeSet NodeSet::permuted(const std::vector<int>& order) const {
  if (static_cast<int>(order.size()) != size())
    throw std::invalid_argument("NodeSet::permuted: wrong length");
  Eigen::MatrixXd p(points_.rows(), points_.cols());
  for (int i = 0; i < size(); ++i) p.row(i) = points_.row(order[static_cast<std::size_t>(i)]);
  return NodeSet(std::move(p), label_);
}

Eigen::MatrixXd build_vandermonde(const Eigen::MatrixXd& points, const IndexSet& indices) {
  if (points.cols() != indices.dim())
    throw std::invalid_argument("build_vandermonde: node/index dimension mismatch");
  const Eigen::Index n = points.rows();
  const int d = indices.dim();
  const int max_deg = std::max(indices.max_degree(), 0);

  // powers[c](i, e) = x_{i,c}^e
  std::vector<Eigen::MatrixXd> powers(static_cast<std::size_t>(d));
  for (int c = 0; c < d; ++c) {
    auto& pw = powers[static_cast<std::size_t>(c)];
    pw.resize(n, max_deg + 1);
    pw.col(0).setOnes();
    for (int e = 1; e <= max_deg; ++e) pw.col(e) = pw.col(e - 1).cwiseProduct(points.col(c));
  }

  Eigen::MatrixXd v(n, static_cast<Eigen::Index>(indices.size()));
  for (std::size_t j = 0; j < indices.size(); ++j) {
    const auto& alpha = indices[j];
    auto col = v.col(static_cast<Eigen::Index>(j));
    col.setOnes();
    for (int c = 0; c < d; ++c) {
      if (alpha[c] > 0) col = col.cwiseProduct(powers[static_cast<std::size_t>(c)].col(alpha[c]));
    }
  }
  return v;
}

Eigen::MatrixXd build_vandermonde(const NodeSet& nodes, const IndexSet& indices) {
  return build_vandermonde(nodes.points(), indices);
}

Eigen::MatrixXd vandermonde_upto(const Eigen::MatrixXd& points, int k, GradedOrder order) {
  return build_vandermonde(
      points, enumerate_indices(static_cast<int>(points.cols()), k, IndexSetKind::total_degree, order));
}

double default_rank_tolerance(Eigen::Index rows, Eigen::Index cols) {
  return 1e-10 * static_cast<double>(std::max(rows, cols));
}

int numerical_rank(const Eigen::MatrixXd& m, std::optional<double> tol) {
  if (m.size() == 0) return 0;
  if (!m.allFinite()) throw std::invalid_argument("numerical_rank: non-finite entries");
  const double t = tol.value_or(default_rank_tolerance(m.rows(), m.cols()));
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > t * s(0)) ++r;
  return r;
}

Eigen::MatrixXd normalized_coordinates(const Eigen::MatrixXd& points) {
  Eigen::MatrixXd p = points;
  for (Eigen::Index c = 0; c < p.cols(); ++c) {
    auto col = p.col(c);
    col.array() -= col.mean();
    const double s = col.lpNorm<Eigen::Infinity>();
    if (s > 0.0) col /= s;
  }
  return p;
}

RankProfile rank_profile(const NodeSet& nodes, std::optional<double> tol, GradedOrder order) {
  const int n = nodes.size();
  if (n < 1) throw std::invalid_argument("rank_profile: empty node set");
  if (!nodes.pairwise_distinct()) throw std::invalid_argument("rank_profile: duplicate nodes");

  const Eigen::MatrixXd p = normalized_coordinates(nodes.points());
  RankProfile prof;
  prof.tolerance_is_default = !tol.has_value();
  int prev = 0;
  for (int k = 0; k <= n - 1; ++k) {
    const Eigen::MatrixXd v = vandermonde_upto(p, k, order);
    const double t = tol.value_or(default_rank_tolerance(v.rows(), v.cols()));
    const int r = numerical_rank(v, t);
    if (r < prev)
      throw numerical_error("rank_profile: rank decreased with degree; tolerance too loose");
    prof.ranks.push_back(r);
    prof.increments.push_back(r - prev);
    prof.rank_tolerance = t;
    prev = r;
    if (r == n) {
      prof.moment_order = k;
      return prof;
    }
  }
  throw numerical_error("rank_profile: V_{<=n-1} not of full row rank at tolerance; "
                        "nodes numerically near-coincident");
}

std::vector<int> generic_profile_prediction(int n, int d) {
  if (n < 1 || d < 1) throw std::invalid_argument("generic_profile_prediction: n, d must be >= 1");
  std::vector<int> t;
  int filled = 0;
  for (int k = 0; filled < n; ++k) {
    const int h = static_cast<int>(homogeneous_count(d, k));
    const int take = std::min(h, n - filled);
    t.push_back(take);
    filled += take;
  }
  return t;
}

}  // namespace flatlim
