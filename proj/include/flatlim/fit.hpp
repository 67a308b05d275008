#pragma once

#include <span>

namespace flatlim {

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double r_squared = 1.0;
  int points = 0;
};

// Ordinary least squares y = intercept + slope * x. Needs >= 3 points.
LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

// Least-squares line through (log x, log y); all values must be positive.
LinearFit loglog_fit(std::span<const double> x, std::span<const double> y);

}  // namespace flatlim
