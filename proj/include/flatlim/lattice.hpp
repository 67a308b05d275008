#pragma once

// Principal lattices, GC witnesses and the two interpolation formulas built
// on them, plus the rank check for full grids containing a scaled lattice.

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "flatlim/kernels.hpp"
#include "flatlim/vandermonde.hpp"

namespace flatlim {

// G(x) = <normal, x> - offset.
struct Hyperplane {
  Eigen::VectorXd normal;
  double offset = 0.0;

  Hyperplane() = default;
  Hyperplane(Eigen::VectorXd n, double c);
  double operator()(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  // |G(x)| / ||normal||
  double distance(const Eigen::Ref<const Eigen::VectorXd>& x) const;
};

struct PrincipalLattice {
  int degree = 0;
  int dim = 0;
  bool scaled = true;  // A(n,d) = n B(n,d) when true
  NodeSet nodes;
  std::vector<std::vector<int>> barycentric;  // (gamma_0, ..., gamma_d), sums to degree
};

// Points in order of increasing last coordinate, first coordinate fastest.
PrincipalLattice principal_lattice(int n, int d, bool scaled = true);

struct GCWitness {
  int degree = 0;
  std::vector<std::vector<Hyperplane>> hyperplanes;  // one list per node
};

// For the node with barycentric beta: {H_kj : gamma_k(x) = j, j < beta_k}.
GCWitness gc_witness_scaled_lattice(int n, int d);

constexpr double default_gc_tolerance = 1e-9;

// Both GC clauses with on-plane test |G(x)|/||normal|| < tol (1 + ||x||),
// and pairwise distinct hyperplanes per node. Throws on malformed witnesses.
bool verify_gc(const NodeSet& nodes, const GCWitness& witness, double tol = default_gc_tolerance);

// sum_i y_i prod_j G_ij(x) / G_ij(x_i).
double interpolate_gc(const NodeSet& nodes, const GCWitness& witness, const std::vector<double>& values,
                      const Eigen::Ref<const Eigen::VectorXd>& query);

// Closed form on A(n,d); values in principal_lattice(n, d) order.
double interpolate_scaled_lattice(int n, int d, const std::vector<double>& values,
                                  const Eigen::Ref<const Eigen::VectorXd>& query);

struct LatticeDeterminant {
  double log_abs_det = 0.0;
  double abs_det = 0.0;
};

// |det V_{<=n}(A(n,d))| (square: p_n nodes, p_n monomials).
LatticeDeterminant lattice_vandermonde_det(int n, int d);

// Smallest l with p_{l-1} < n <= p_l (0 for n = 1).
int lattice_order_for(int n, int d);

struct GridRankCheck {
  bool holds = true;     // premise implies rank >= n
  bool premise = false;  // grid half width >= l, so A(l,d) fits in the grid
  int ell = 0;
  int m = 0;
  int rank = 0;
  GridConvention convention = GridConvention::closed;
};

GridRankCheck grid_rank_theorem_check(const NodeSet& nodes, int N, std::optional<double> tol = std::nullopt,
                                      GridConvention convention = GridConvention::closed);

}  // namespace flatlim
