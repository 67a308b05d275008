#pragma once

// Node configurations used by the experiments: points on a line, on a
// parabola, or in general position.

#include <cstdint>
#include <optional>
#include <string>

#include "flatlim/vandermonde.hpp"

namespace flatlim {

enum class GeometryKind { line, parabola, random };

// separation: rescale to unit minimal infinity-norm separation.
// extent: rescale so the largest |coordinate| is 1.
enum class GeometryScaling { separation, extent, none };

struct GeometrySpec {
  GeometryKind kind = GeometryKind::random;
  int n = 1;
  int d = 2;
  // Curve coefficient; defaults 5 (line y = 5x) and 10 (parabola y = 10x^2).
  std::optional<double> coefficient;
  std::uint64_t seed = 1;
  GeometryScaling scaling = GeometryScaling::separation;
};

// Abscissae t = linspace(-1, 1, n).
//   line:     d=1 (t), d=2 (t, c t),   d=3 (t, c t, 2c t)
//   parabola: d=2 (t, c t^2),          d=3 (t, (c/2) t, c t^2)
//   random:   uniform on [-1, 1]^d from the seeded generator.
NodeSet make_geometry(const GeometrySpec& spec);

std::string to_string(GeometryKind k);
GeometryKind geometry_kind_from_string(const std::string& s);
std::string to_string(GeometryScaling s);
GeometryScaling geometry_scaling_from_string(const std::string& s);

}  // namespace flatlim
