#include "flatlim/lattice.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/LU>

#include "flatlim/errors.hpp"

namespace flatlim {

Hyperplane::Hyperplane(Eigen::VectorXd n, double c) : normal(std::move(n)), offset(c) {
  if (normal.size() == 0 || normal.lpNorm<Eigen::Infinity>() == 0.0)
    throw std::invalid_argument("Hyperplane: normal must be nonzero");
}

double Hyperplane::operator()(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != normal.size()) throw std::invalid_argument("Hyperplane: dimension mismatch");
  return normal.dot(x) - offset;
}

double Hyperplane::distance(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return std::abs((*this)(x)) / normal.norm();
}

namespace {

void lattice_points(int remaining, int slot, std::vector<int>& gamma,
                    std::vector<std::vector<int>>& out) {
  if (slot < 0) {
    out.push_back(gamma);
    return;
  }
  for (int e = 0; e <= remaining; ++e) {
    gamma[static_cast<std::size_t>(slot)] = e;
    lattice_points(remaining - e, slot - 1, gamma, out);
  }
}

bool same_hyperplane(const Hyperplane& a, const Hyperplane& b, double tol) {
  const double na = a.normal.norm(), nb = b.normal.norm();
  const Eigen::VectorXd ua = a.normal / na, ub = b.normal / nb;
  const double sign = ua.dot(ub) < 0.0 ? -1.0 : 1.0;
  return (ua - sign * ub).lpNorm<Eigen::Infinity>() < tol &&
         std::abs(a.offset / na - sign * b.offset / nb) < tol * (1.0 + std::abs(a.offset / na));
}

}  // namespace

PrincipalLattice principal_lattice(int n, int d, bool scaled) {
  if (n < 1 || d < 1) throw std::invalid_argument("principal_lattice: need n >= 1, d >= 1");
  std::vector<std::vector<int>> gammas;
  std::vector<int> gamma(static_cast<std::size_t>(d), 0);
  lattice_points(n, d - 1, gamma, gammas);

  PrincipalLattice lat;
  lat.degree = n;
  lat.dim = d;
  lat.scaled = scaled;
  Eigen::MatrixXd pts(static_cast<Eigen::Index>(gammas.size()), d);
  for (std::size_t i = 0; i < gammas.size(); ++i) {
    std::vector<int> bary(static_cast<std::size_t>(d + 1));
    int sum = 0;
    for (int c = 0; c < d; ++c) {
      const int g = gammas[i][static_cast<std::size_t>(c)];
      pts(static_cast<Eigen::Index>(i), c) = scaled ? g : static_cast<double>(g) / n;
      bary[static_cast<std::size_t>(c + 1)] = g;
      sum += g;
    }
    bary[0] = n - sum;
    lat.barycentric.push_back(std::move(bary));
  }
  lat.nodes = NodeSet(std::move(pts), scaled ? "A(n,d)" : "B(n,d)");
  return lat;
}

GCWitness gc_witness_scaled_lattice(int n, int d) {
  const auto lat = principal_lattice(n, d, true);
  GCWitness w;
  w.degree = n;
  for (const auto& beta : lat.barycentric) {
    std::vector<Hyperplane> planes;
    for (int k = 0; k <= d; ++k) {
      for (int j = 0; j < beta[static_cast<std::size_t>(k)]; ++j) {
        if (k == 0)
          planes.emplace_back(Eigen::VectorXd::Ones(d), static_cast<double>(n - j));
        else
          planes.emplace_back(Eigen::VectorXd::Unit(d, k - 1), static_cast<double>(j));
      }
    }
    w.hyperplanes.push_back(std::move(planes));
  }
  return w;
}

bool verify_gc(const NodeSet& nodes, const GCWitness& witness, double tol) {
  const int n = nodes.size();
  if (static_cast<int>(witness.hyperplanes.size()) != n)
    throw std::invalid_argument("verify_gc: one hyperplane list per node required");
  for (const auto& list : witness.hyperplanes) {
    if (static_cast<int>(list.size()) != witness.degree)
      throw std::invalid_argument("verify_gc: each hyperplane list must have exactly `degree` entries");
    for (const auto& h : list)
      if (h.normal.size() != nodes.dim()) throw std::invalid_argument("verify_gc: dimension mismatch");
  }

  auto on_plane = [&](const Hyperplane& h, int node) {
    const Eigen::VectorXd x = nodes.points().row(node).transpose();
    return h.distance(x) < tol * (1.0 + x.norm());
  };

  for (int i = 0; i < n; ++i) {
    const auto& list = witness.hyperplanes[static_cast<std::size_t>(i)];
    for (std::size_t a = 0; a < list.size(); ++a)
      for (std::size_t b = a + 1; b < list.size(); ++b)
        if (same_hyperplane(list[a], list[b], tol)) return false;
    for (const auto& h : list)
      if (on_plane(h, i)) return false;
    for (int k = 0; k < n; ++k) {
      if (k == i) continue;
      bool covered = false;
      for (const auto& h : list) covered = covered || on_plane(h, k);
      if (!covered) return false;
    }
  }
  return true;
}

double interpolate_gc(const NodeSet& nodes, const GCWitness& witness, const std::vector<double>& values,
                      const Eigen::Ref<const Eigen::VectorXd>& query) {
  const int n = nodes.size();
  if (static_cast<int>(values.size()) != n || static_cast<int>(witness.hyperplanes.size()) != n)
    throw std::invalid_argument("interpolate_gc: values/witness size mismatch");
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd xi = nodes.points().row(i).transpose();
    double basis = 1.0;
    for (const auto& h : witness.hyperplanes[static_cast<std::size_t>(i)]) {
      const double gi = h(xi);
      if (std::abs(gi) < 1e-14 * h.normal.norm() * (1.0 + xi.norm()))
        throw numerical_error("interpolate_gc: witness hyperplane passes through its own node");
      basis *= h(query) / gi;
    }
    acc += values[static_cast<std::size_t>(i)] * basis;
  }
  return acc;
}

double interpolate_scaled_lattice(int n, int d, const std::vector<double>& values,
                                  const Eigen::Ref<const Eigen::VectorXd>& query) {
  if (query.size() != d) throw std::invalid_argument("interpolate_scaled_lattice: dimension mismatch");
  const auto lat = principal_lattice(n, d, true);
  if (values.size() != lat.barycentric.size())
    throw std::invalid_argument("interpolate_scaled_lattice: need one value per lattice node");
  std::vector<double> gx(static_cast<std::size_t>(d + 1));
  gx[0] = n - query.sum();
  for (int k = 0; k < d; ++k) gx[static_cast<std::size_t>(k + 1)] = query(k);

  double acc = 0.0;
  for (std::size_t a = 0; a < values.size(); ++a) {
    const auto& ga = lat.barycentric[a];
    double basis = 1.0;
    for (int k = 0; k <= d; ++k) {
      const int gk = ga[static_cast<std::size_t>(k)];
      for (int j = 0; j < gk; ++j) basis *= (gx[static_cast<std::size_t>(k)] - j) / (gk - j);
    }
    acc += values[a] * basis;
  }
  return acc;
}

LatticeDeterminant lattice_vandermonde_det(int n, int d) {
  const auto lat = principal_lattice(n, d, true);
  const Eigen::MatrixXd v = vandermonde_upto(lat.nodes.points(), n);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(v);
  LatticeDeterminant out;
  const auto& u = lu.matrixLU();
  for (Eigen::Index i = 0; i < u.rows(); ++i) out.log_abs_det += std::log(std::abs(u(i, i)));
  out.abs_det = std::exp(out.log_abs_det);
  return out;
}

int lattice_order_for(int n, int d) {
  if (n < 1 || d < 1) throw std::invalid_argument("lattice_order_for: need n >= 1, d >= 1");
  int ell = 0;
  while (static_cast<int>(total_degree_count(d, ell)) < n) ++ell;
  return ell;
}

GridRankCheck grid_rank_theorem_check(const NodeSet& nodes, int N, std::optional<double> tol,
                                      GridConvention convention) {
  if (N < 1) throw std::invalid_argument("grid_rank_theorem_check: N must be >= 1");
  GridRankCheck out;
  out.convention = convention;
  out.ell = lattice_order_for(nodes.size(), nodes.dim());
  out.m = rank_profile(nodes, tol).moment_order;
  const auto grid = SamplingSet::full_grid(N, nodes.dim(), convention);
  const Eigen::MatrixXd v = vandermonde_upto(normalized_coordinates(grid.frequencies()), out.m);
  out.rank = numerical_rank(v, tol);
  out.premise = grid.half_width() >= out.ell;
  out.holds = !out.premise || out.rank >= nodes.size();
  return out;
}

}  // namespace flatlim
