#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "flatlim/monomial.hpp"

namespace flatlim {

// n points in R^d, one per row.
class NodeSet {
 public:
  NodeSet() = default;
  explicit NodeSet(Eigen::MatrixXd points, std::string label = {});
  static NodeSet from_rows(const std::vector<std::vector<double>>& rows, std::string label = {});

  int size() const { return static_cast<int>(points_.rows()); }
  int dim() const { return static_cast<int>(points_.cols()); }
  const Eigen::MatrixXd& points() const { return points_; }
  Eigen::RowVectorXd point(int i) const { return points_.row(i); }
  const std::string& label() const { return label_; }

  // Minimal pairwise infinity-norm distance; +inf for n < 2.
  double min_separation() const;
  bool pairwise_distinct() const { return min_separation() > 0.0; }

  NodeSet scaled(double c) const;
  NodeSet permuted(const std::vector<int>& order) const;

 private:
  Eigen::MatrixXd points_;
  std::string label_;
};

// Entry (i, j) = x_i^{alpha_j}; columns in IndexSet order.
Eigen::MatrixXd build_vandermonde(const Eigen::MatrixXd& points, const IndexSet& indices);
Eigen::MatrixXd build_vandermonde(const NodeSet& nodes, const IndexSet& indices);

// V_{<=k} with the default graded order.
Eigen::MatrixXd vandermonde_upto(const Eigen::MatrixXd& points, int k,
                                 GradedOrder order = GradedOrder::grevlex);

double default_rank_tolerance(Eigen::Index rows, Eigen::Index cols);

// Number of singular values above tol * sigma_max.
int numerical_rank(const Eigen::MatrixXd& m, std::optional<double> tol = std::nullopt);

// Per-coordinate centering and max-abs scaling. An invertible affine map of
// each coordinate, so polynomial-space ranks are unchanged.
Eigen::MatrixXd normalized_coordinates(const Eigen::MatrixXd& points);

struct RankProfile {
  std::vector<int> ranks;       // r_0, ..., r_m
  std::vector<int> increments;  // t_0 = r_0, t_k = r_k - r_{k-1}
  int moment_order = 0;         // m = mu(X)
  double rank_tolerance = 0.0;  // tol used for the last rank decision
  bool tolerance_is_default = true;

  int num_nodes() const { return ranks.empty() ? 0 : ranks.back(); }
};

// Throws std::invalid_argument on duplicate nodes.
RankProfile rank_profile(const NodeSet& nodes, std::optional<double> tol = std::nullopt,
                         GradedOrder order = GradedOrder::grevlex);

// t_k for n points in general position in R^d.
std::vector<int> generic_profile_prediction(int n, int d);

}  // namespace flatlim
