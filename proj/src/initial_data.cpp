#include "swm/initial_data.hpp"

#include <cmath>

#include "swm/errors.hpp"

namespace swm {

Vec3Field great_circle(const ScalarField& theta) {
  Vec3Field u(theta.size());
  for (std::size_t j = 0; j < theta.size(); ++j) u.set(j, {std::cos(theta[j]), std::sin(theta[j]), 0.0});
  return u;
}

Vec3Field great_circle_velocity(const ScalarField& theta, const ScalarField& theta_t) {
  if (theta.size() != theta_t.size()) throw ConfigError("great_circle_velocity: size mismatch");
  Vec3Field v(theta.size());
  for (std::size_t j = 0; j < theta.size(); ++j)
    v.set(j, {-theta_t[j] * std::sin(theta[j]), theta_t[j] * std::cos(theta[j]), 0.0});
  return v;
}

ScalarField equator_angle(const Vec3Field& u) {
  ScalarField th(u.size());
  for (std::size_t j = 0; j < u.size(); ++j) th[j] = std::atan2(u[1][j], u[0][j]);
  return th;
}

ScalarField bump_angle(const GridSpec& grid, double amplitude, double width) {
  if (!(width > 0.0)) throw ConfigError("bump width must be positive");
  return sample(grid, [&](double x) { return amplitude * std::exp(-x * x / (width * width)); });
}

Vec3Field geodesic_bump(const GridSpec& grid, double amplitude, double width) {
  return great_circle(bump_angle(grid, amplitude, width));
}

double bump_support_radius(double amplitude, double width) {
  const double a = std::abs(amplitude);
  if (a <= 1e-10) return 0.0;
  return width * std::sqrt(std::log(a / 1e-10));
}

Vec3Field normal_velocity_profile(const GridSpec& grid) {
  Vec3Field w(grid.n_points());
  for (int j = 0; j < grid.n_points(); ++j) w[2][j] = std::exp(-grid.x(j) * grid.x(j));
  return w;
}

}  // namespace swm
