#pragma once

#include <span>
#include <utility>
#include <vector>

namespace swm {

struct Estimate {
  double mean = 0.0;
  double stderr_ = 0.0;  ///< sample standard deviation / sqrt(n); 0 for n < 2
  int n = 0;
};

Estimate estimate(std::span<const double> samples);

/// Ordinary least squares of log(value) on log(eps).
struct LogLogFit {
  double slope = 0.0;
  double intercept = 0.0;
  double ci_low = 0.0;  ///< two-sided 95% Student-t interval for the slope
  double ci_high = 0.0;
  double r2 = 0.0;      ///< 1 when the residuals vanish
  std::vector<double> residuals;
  int n = 0;
};

/// Throws ConfigError with fewer than 3 points or any nonpositive coordinate.
LogLogFit fit_loglog_slope(const std::vector<std::pair<double, double>>& points);

}  // namespace swm
