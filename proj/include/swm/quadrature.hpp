#pragma once

#include <functional>
#include <vector>

namespace swm::quad {

/// Adaptive Gauss-Kronrod with endpoint-singularity extrapolation on [a, b].
/// Throws NumericalError (with the integrator's diagnostics) if the requested
/// relative tolerance cannot be reached.
double integrate(const std::function<double(double)>& f, double a, double b, double rel_tol = 1e-10);

/// Integral over [a, inf).
double integrate_to_infinity(const std::function<double(double)>& f, double a, double rel_tol = 1e-10);

/// Integral over [a, inf) split at the given interior breakpoints (sorted, > a).
/// The last piece [b_last, inf) uses the semi-infinite rule.
double integrate_half_line(const std::function<double(double)>& f, double a,
                           const std::vector<double>& breakpoints, double rel_tol = 1e-10);

}  // namespace swm::quad
