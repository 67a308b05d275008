#include "flatlim/geometry.hpp"

#include <cmath>
#include <stdexcept>

#include "flatlim/random.hpp"

namespace flatlim {

NodeSet make_geometry(const GeometrySpec& spec) {
  const int n = spec.n, d = spec.d;
  if (n < 1) throw std::invalid_argument("geometry: n must be >= 1");
  if (d < 1) throw std::invalid_argument("geometry: d must be >= 1");

  Eigen::MatrixXd p(n, d);
  auto t_of = [n](int i) { return n == 1 ? 0.0 : -1.0 + 2.0 * i / (n - 1); };

  switch (spec.kind) {
    case GeometryKind::line: {
      if (d > 3) throw std::invalid_argument("geometry: line supports d <= 3");
      const double c = spec.coefficient.value_or(5.0);
      for (int i = 0; i < n; ++i) {
        const double t = t_of(i);
        p(i, 0) = t;
        if (d >= 2) p(i, 1) = c * t;
        if (d >= 3) p(i, 2) = 2.0 * c * t;
      }
      break;
    }
    case GeometryKind::parabola: {
      if (d < 2 || d > 3) throw std::invalid_argument("geometry: parabola supports d in {2, 3}");
      const double c = spec.coefficient.value_or(10.0);
      for (int i = 0; i < n; ++i) {
        const double t = t_of(i);
        p(i, 0) = t;
        if (d == 2) {
          p(i, 1) = c * t * t;
        } else {
          p(i, 1) = 0.5 * c * t;
          p(i, 2) = c * t * t;
        }
      }
      break;
    }
    case GeometryKind::random: {
      Rng rng(spec.seed);
      for (int i = 0; i < n; ++i)
        for (int c = 0; c < d; ++c) p(i, c) = rng.uniform(-1.0, 1.0);
      break;
    }
  }

  NodeSet nodes(std::move(p), to_string(spec.kind));
  if (!nodes.pairwise_distinct()) throw std::invalid_argument("geometry: generated nodes coincide");
  switch (spec.scaling) {
    case GeometryScaling::separation:
      if (n >= 2) nodes = nodes.scaled(1.0 / nodes.min_separation());
      break;
    case GeometryScaling::extent: {
      const double e = nodes.points().lpNorm<Eigen::Infinity>();
      if (e > 0.0) nodes = nodes.scaled(1.0 / e);
      break;
    }
    case GeometryScaling::none:
      break;
  }
  return nodes;
}

std::string to_string(GeometryKind k) {
  switch (k) {
    case GeometryKind::line: return "line";
    case GeometryKind::parabola: return "parabola";
    case GeometryKind::random: return "random";
  }
  return "random";
}

GeometryKind geometry_kind_from_string(const std::string& s) {
  if (s == "line") return GeometryKind::line;
  if (s == "parabola") return GeometryKind::parabola;
  if (s == "random") return GeometryKind::random;
  throw std::invalid_argument("unknown geometry kind: " + s);
}

std::string to_string(GeometryScaling s) {
  switch (s) {
    case GeometryScaling::separation: return "separation";
    case GeometryScaling::extent: return "extent";
    case GeometryScaling::none: return "none";
  }
  return "none";
}

GeometryScaling geometry_scaling_from_string(const std::string& s) {
  if (s == "separation") return GeometryScaling::separation;
  if (s == "extent") return GeometryScaling::extent;
  if (s == "none") return GeometryScaling::none;
  throw std::invalid_argument("unknown geometry scaling: " + s);
}

}  // namespace flatlim
