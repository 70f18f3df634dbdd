#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace swm {

/// Periodic grid on [-L, L) with N points plus a uniform time grid.
///
/// Frequencies live on the lattice xi_k = pi k / L, k = -N/2 ... N/2-1.
class GridSpec {
 public:
  /// Throws ConfigError unless L > 0, N even and >= 8, dt > 0, n_steps >= 0.
  static GridSpec make(double half_length, int n_points, double dt, int n_steps);

  double half_length() const { return half_length_; }
  int n_points() const { return n_points_; }
  double dx() const { return 2.0 * half_length_ / n_points_; }
  double dt() const { return dt_; }
  int n_steps() const { return n_steps_; }
  double horizon() const { return dt_ * n_steps_; }

  double x(int j) const { return -half_length_ + j * dx(); }
  /// Lattice spacing in frequency, pi / L.
  double dxi() const;
  /// xi_k for k in [-N/2, N/2).
  double wavenumber(int k) const { return k * dxi(); }
  /// Highest resolved frequency pi / dx.
  double nyquist() const;

  GridSpec with_time(double dt, int n_steps) const;
  bool same_space(const GridSpec& other) const;
  bool operator==(const GridSpec& other) const = default;

 private:
  GridSpec(double l, int n, double dt, int steps)
      : half_length_(l), n_points_(n), dt_(dt), n_steps_(steps) {}

  double half_length_;
  int n_points_;
  double dt_;
  int n_steps_;
};

using ScalarField = std::vector<double>;

/// Three real components stored separately, one value per grid point.
struct Vec3Field {
  std::array<ScalarField, 3> c;

  Vec3Field() = default;
  explicit Vec3Field(std::size_t n) : c{ScalarField(n, 0.0), ScalarField(n, 0.0), ScalarField(n, 0.0)} {}

  std::size_t size() const { return c[0].size(); }
  ScalarField& operator[](int i) { return c[i]; }
  const ScalarField& operator[](int i) const { return c[i]; }
  std::array<double, 3> at(std::size_t j) const { return {c[0][j], c[1][j], c[2][j]}; }
  void set(std::size_t j, const std::array<double, 3>& p) {
    c[0][j] = p[0];
    c[1][j] = p[1];
    c[2][j] = p[2];
  }
  bool operator==(const Vec3Field&) const = default;
};

/// Real-to-complex transforms and spectral calculus on one grid.
///
/// Holds scratch buffers, so an instance must not be shared between threads.
/// Plans are cached per size behind a mutex; execution is reentrant.
class Spectral {
 public:
  explicit Spectral(const GridSpec& grid);
  ~Spectral();
  Spectral(const Spectral&) = delete;
  Spectral& operator=(const Spectral&) = delete;
  Spectral(Spectral&&) noexcept;
  Spectral& operator=(Spectral&&) noexcept;

  int n_points() const { return n_; }
  /// Non-negative wavenumbers of the half spectrum, size N/2+1.
  std::span<const double> wavenumbers() const { return k_; }

  /// Unnormalized forward transform F_m = sum_j f_j exp(-2 pi i m j / N); out has N/2+1 entries.
  void forward(std::span<const double> f, std::span<std::complex<double>> out);
  /// Inverse of forward (includes the 1/N factor).
  void inverse(std::span<const std::complex<double>> in, std::span<double> f);

  /// First and second derivatives from one forward transform. Either output may be empty.
  void derivatives(std::span<const double> f, std::span<double> d1, std::span<double> d2);
  void derivative(std::span<const double> f, std::span<double> out, int order);

  /// out = F^-1[ mult(m) * F[f] ], mult indexed by half-spectrum mode m.
  void apply_multiplier(std::span<const double> f, std::span<const double> mult, std::span<double> out);

  /// Synthesizes a real field from half-spectrum coefficients (out = inverse without 1/N).
  void synthesize(std::span<const std::complex<double>> coeffs, std::span<double> out);

  /// dx-weighted squared L2 norm of the k-th derivative computed from the spectrum.
  double hdot_squared(std::span<const double> f, int k, double dx);

  struct Plans;

 private:
  int n_;
  std::vector<double> k_;
  std::shared_ptr<Plans> plans_;
  std::vector<std::complex<double>> spec_;
  std::vector<std::complex<double>> work_;
  std::vector<double> real_work_;
};

// Free-function calculus. Each call builds its own transform workspace.

ScalarField derivative(const ScalarField& f, const GridSpec& grid, int order);
Vec3Field derivative(const Vec3Field& f, const GridSpec& grid, int order);

enum class NormKind { L2, H1, Hdot, Linf };

/// L2 = sqrt(dx sum |f|^2); Hdot = L2 of the k-th derivative (k <= N/4);
/// H1 = sqrt(L2^2 + Hdot_1^2); Linf = max pointwise magnitude.
double norm(const ScalarField& f, const GridSpec& grid, NormKind kind, int k = 1);
double norm(const Vec3Field& f, const GridSpec& grid, NormKind kind, int k = 1);

/// dx sum f_j g_j; throws ConfigError on length mismatch.
double inner(const ScalarField& f, const ScalarField& g, const GridSpec& grid);
double inner(const Vec3Field& f, const Vec3Field& g, const GridSpec& grid);

/// Field sampled from a function of x on the grid points.
template <class F>
ScalarField sample(const GridSpec& grid, F&& fn) {
  ScalarField out(grid.n_points());
  for (int j = 0; j < grid.n_points(); ++j) out[j] = fn(grid.x(j));
  return out;
}

}  // namespace swm
