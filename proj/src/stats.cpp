#include "swm/stats.hpp"

#include <gsl/gsl_cdf.h>

#include <cmath>
#include <sstream>

#include "swm/errors.hpp"

namespace swm {

Estimate estimate(std::span<const double> samples) {
  Estimate e;
  e.n = static_cast<int>(samples.size());
  if (e.n == 0) return e;
  double s = 0.0;
  for (double v : samples) s += v;
  e.mean = s / e.n;
  if (e.n < 2) return e;
  double q = 0.0;
  for (double v : samples) q += (v - e.mean) * (v - e.mean);
  e.stderr_ = std::sqrt(q / (e.n - 1) / e.n);
  return e;
}

LogLogFit fit_loglog_slope(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 3) throw ConfigError("fit_loglog_slope: need at least 3 points");
  const int n = static_cast<int>(points.size());
  std::vector<double> x(n), y(n);
  for (int i = 0; i < n; ++i) {
    const auto [e, v] = points[i];
    if (!(e > 0.0) || !(v > 0.0)) {
      std::ostringstream os;
      os << "fit_loglog_slope: nonpositive point (" << e << ", " << v << ")";
      throw ConfigError(os.str());
    }
    x[i] = std::log(e);
    y[i] = std::log(v);
  }
  double mx = 0.0, my = 0.0;
  for (int i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (int i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw ConfigError("fit_loglog_slope: all eps values coincide");
  LogLogFit f;
  f.n = n;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double sse = 0.0;
  for (int i = 0; i < n; ++i) {
    const double r = y[i] - (f.intercept + f.slope * x[i]);
    f.residuals.push_back(r);
    sse += r * r;
  }
  f.r2 = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  if (sse == 0.0) f.r2 = 1.0;
  const double se = std::sqrt(sse / (n - 2) / sxx);
  const double t = gsl_cdf_tdist_Pinv(0.975, n - 2);
  f.ci_low = f.slope - t * se;
  f.ci_high = f.slope + t * se;
  return f;
}

}  // namespace swm
