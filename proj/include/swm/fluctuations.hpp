#pragma once

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "swm/grid.hpp"
#include "swm/noise.hpp"

namespace swm {

/// A field at every time step n = 0 ... n_steps of a grid.
using FieldPath = std::vector<Vec3Field>;

/// Trapezoid-in-time L2(0,T; L2) norm of a path on the grid's time step.
double path_l2_norm(const FieldPath& p, const GridSpec& grid);
/// Same norm of the difference a - b.
double path_l2_distance(const FieldPath& a, const FieldPath& b, const GridSpec& grid);

/// One-step semi-implicit integrator for linear equations of the form
///   gamma0 dw = [w_xx + |u_x|^2 r + 2 (u_x . r_x) x] dt + f dW.
/// The Laplacian is taken implicitly; everything else at the left endpoint.
class LinearHeatStepper {
 public:
  LinearHeatStepper(const GridSpec& grid, double gamma0);

  /// w <- S (w + f dW / gamma0), S = (1 + dt xi^2 / gamma0)^{-1}.
  void additive(Vec3Field& w, const Vec3Field& f, std::span<const double> dw);

  /// w <- S (w + dt/gamma0 [|u_x|^2 r + 2 (u_x . r_x) x] + f dW / gamma0).
  /// f may be null (no noise).
  void linearized(Vec3Field& w, const Vec3Field& r, const Vec3Field& u, const Vec3Field& x, const Vec3Field* f,
                  std::span<const double> dw);

 private:
  void finish(Vec3Field& w);

  GridSpec grid_;
  double gamma0_;
  Spectral spectral_;
  std::vector<double> resolvent_;
  Vec3Field du_, dr_, acc_;
  ScalarField g2_;
};

/// u x v pointwise.
Vec3Field cross(const Vec3Field& a, const Vec3Field& b);

/// Shared inputs of the fluctuation solvers. Paths are sampled at every step.
struct FluctuationInputs {
  explicit FluctuationInputs(GridSpec g) : grid(g) {}

  GridSpec grid;
  double epsilon = 1.0;
  double hurst = 0.75;
  double a_h = 1.0;
  double gamma0 = 1.0;
  MollifierSpec mollifier = MollifierSpec::gaussian();
  /// Drives w^H in the fluctuation equations.
  std::shared_ptr<const NoiseTable> table;
  /// The table that drove the wave-map run (must be the same object for coupled solves).
  std::shared_ptr<const NoiseTable> wave_table;
  FieldPath wave_u, wave_v;  ///< u_eps, d/dt u_eps
  FieldPath heat_u;          ///< heat-flow reference u
};

/// Throws CouplingError unless both tables are present, identical in content,
/// and the same object.
void audit_coupling(const std::shared_ptr<const NoiseTable>& a, const std::shared_ptr<const NoiseTable>& b);

/// gamma0 dz_eps = z_xx dt + (u_eps x v_eps) Q^eps dW^H, z_eps(0) = eps^{H/2-1}(u_eps(0) - u(0)).
FieldPath solve_z_eps(const FluctuationInputs& in);

/// gamma0 dz = z_xx dt + (u x u_t) dW^H, z(0) = 0.
FieldPath solve_z_limit(const FluctuationInputs& in);

enum class RhoVariant { RhoEps, RhoLimit };

/// Linearized heat flow driven by the same noise as z_eps (RhoEps) or z (RhoLimit).
FieldPath solve_rho(const FluctuationInputs& in, RhoVariant variant);

/// eps^{H/2-1} (u_eps - u) at every stored step.
FieldPath compute_y_eps(const FieldPath& wave_u, const FieldPath& heat_u, double epsilon, double hurst);

/// Theta_xi(v) = w + xi with w(0) = 0 and w stepped by the linearized drift of v.
FieldPath apply_theta(const FieldPath& v, const FieldPath& xi, const FieldPath& heat_u, const GridSpec& grid,
                      double gamma0);

struct LambdaResult {
  FieldPath value;
  int iterations = 0;
  double last_increment = 0.0;  ///< relative weighted-norm change of the final iteration
  double residual = 0.0;        ///< |Theta(value) - value| / |xi| in L2(0,T;L2)
  double weight = 0.0;          ///< lambda in the e^{-2 lambda t} weighted norm
};

enum class LambdaMethod { Picard, Direct };

/// Lambda(xi): the fixed point of Theta_xi. Picard iterates in the weighted
/// norm until the relative change is below tol (NumericalError after
/// max_iterations); Direct solves the causal recursion step by step.
LambdaResult solve_lambda(const FieldPath& xi, const FieldPath& heat_u, const GridSpec& grid, double gamma0,
                          LambdaMethod method = LambdaMethod::Picard, double tol = 1e-10, int max_iterations = 200);

/// (8 pi t)^{-1/4}: L2 norm of the heat kernel (4 pi t)^{-1/2} exp(-x^2 / 4t).
double heat_kernel_l2_norm(double t);
/// The heat kernel sampled on the grid.
ScalarField heat_kernel(const GridSpec& grid, double t);

}  // namespace swm
