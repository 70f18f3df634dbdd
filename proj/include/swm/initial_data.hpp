#pragma once

#include <string>

#include "swm/grid.hpp"

namespace swm {

/// Great-circle map u = (cos th, sin th, 0). Equals (1, 0, 0) where th = 0.
Vec3Field great_circle(const ScalarField& theta);

/// Velocity th_t (-sin th, cos th, 0) of a great-circle map.
Vec3Field great_circle_velocity(const ScalarField& theta, const ScalarField& theta_t);

/// Angle recovered from a map that lies on the equator.
ScalarField equator_angle(const Vec3Field& u);

/// th(x) = amplitude exp(-x^2 / width^2).
ScalarField bump_angle(const GridSpec& grid, double amplitude, double width = 1.0);

/// The geodesic bump: great_circle(bump_angle(...)).
Vec3Field geodesic_bump(const GridSpec& grid, double amplitude, double width = 1.0);

/// Radius outside which the bump angle is below 1e-10 (the map is constant there).
double bump_support_radius(double amplitude, double width = 1.0);

/// exp(-x^2) (0, 0, 1): tangent to every great-circle map.
Vec3Field normal_velocity_profile(const GridSpec& grid);

}  // namespace swm
