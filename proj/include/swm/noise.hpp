#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "swm/grid.hpp"

namespace swm {

/// Fourier transform of a symmetric probability kernel eta together with the
/// decay exponents it is declared to satisfy:
///   1 - F(x) <~ |x|^a near 0,   |F(x)| <~ |x|^b for x >= 1.
/// b = -infinity encodes super-polynomial decay.
struct MollifierSpec {
  std::string name;
  std::function<double(double)> fourier;
  double a = 0.0;
  double b = 0.0;

  /// F(xi) = exp(-xi^2 / 2); a = 2, b = -infinity.
  static MollifierSpec gaussian();
  /// F == 1. Only valid on densities that already have finite mass.
  static MollifierSpec identity();
  /// Looks up a mollifier by name ("gaussian", "identity").
  static MollifierSpec by_name(const std::string& name);
};

enum class DensityKind { Generic, Fractional, Mollified, Rescaled };

std::string to_string(DensityKind kind);

/// Even, nonnegative spectral density m = d(mu)/d(xi).
class SpectralDensity {
 public:
  /// m(xi); symmetric by construction (the evaluator only ever sees |xi|).
  double operator()(double xi) const { return eval_(xi < 0.0 ? -xi : xi); }

  DensityKind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  std::optional<double> hurst() const { return hurst_; }
  double a_H() const { return a_h_; }
  /// Product of every rescaling applied so far (1 if none).
  double epsilon() const { return epsilon_; }
  bool finite_mass() const { return finite_mass_; }
  /// Points in |xi| where the integrand changes character; used to split quadrature.
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::optional<MollifierSpec>& mollifier() const { return mollifier_; }

 private:
  friend SpectralDensity make_generic_density(std::string, std::function<double(double)>, std::vector<double>);
  friend SpectralDensity make_fractional_density(double, double);
  friend SpectralDensity mollify(const SpectralDensity&, const MollifierSpec&);
  friend SpectralDensity rescale(const SpectralDensity&, double);

  std::function<double(double)> eval_;
  DensityKind kind_ = DensityKind::Generic;
  std::string name_;
  std::optional<double> hurst_;
  double a_h_ = 1.0;
  double epsilon_ = 1.0;
  bool finite_mass_ = true;
  std::vector<double> breakpoints_;
  std::optional<MollifierSpec> mollifier_;
};

/// Density with finite mass given by a user evaluator on xi >= 0.
SpectralDensity make_generic_density(std::string name, std::function<double(double)> m,
                                     std::vector<double> breakpoints = {});
/// a_H |xi|^{1-2H}; throws ConfigError unless H in [1/2, 1) and a_H > 0.
SpectralDensity make_fractional_density(double hurst, double a_h = 1.0);
/// |F eta(xi)|^2 base(xi). Throws ConfigError if the mollifier's exponents do
/// not regularize the given base (a >= H - 1/2, b < H - 2) or F eta(0) != 1.
SpectralDensity mollify(const SpectralDensity& base, const MollifierSpec& moll);
/// sqrt(eps) base(sqrt(eps) xi). Throws ConfigError for eps <= 0 or infinite-mass base.
SpectralDensity rescale(const SpectralDensity& base, double eps);

struct Moments {
  double c0 = 0.0;  ///< total mass
  double c1 = 0.0;  ///< second moment
  bool finite = true;
};

/// c0 = int m, c1 = int xi^2 m by adaptive quadrature (relative tolerance 1e-10).
/// Infinite-mass densities return {inf, inf, false}.
Moments moments(const SpectralDensity& d);

/// gamma + c0 / 2.
double enhanced_friction(double gamma, const Moments& m);

/// Per-mode integral of m over the frequency cell around xi_k, k = 0 ... N/2-1.
/// Cell 0 is [-dxi/2, dxi/2]; the others are [xi_k - dxi/2, xi_k + dxi/2].
std::vector<double> cell_weights(const SpectralDensity& d, const GridSpec& grid);

/// Modal standard deviations of a homogeneous field: sqrt(w_0) for k = 0 and
/// sqrt(2 w_k) for the cosine/sine pair of k >= 1.
std::vector<double> modal_amplitudes(const SpectralDensity& d, const GridSpec& grid);

/// Pointwise variance rate sum_k amp_k^2 of a field with the given amplitudes.
double discrete_mass(std::span<const double> amplitudes);

/// Gaussian increment bank: for each time step, N standard normals scaled by
/// sqrt(dt), laid out as (B_k, B'_k) pairs for k = 0 ... N/2-1.
class NoiseTable {
 public:
  NoiseTable(std::uint64_t seed, const GridSpec& grid);

  std::uint64_t seed() const { return seed_; }
  int n_points() const { return n_points_; }
  int n_steps() const { return n_steps_; }
  double dt() const { return dt_; }
  GridSpec grid() const { return GridSpec::make(half_length_, n_points_, dt_, n_steps_); }
  /// Throws ConfigError if step is out of range.
  std::span<const double> row(int step) const;
  std::span<const double> data() const { return values_; }
  /// FNV-1a hash of the stored values.
  std::uint64_t fingerprint() const;

  /// Little-endian dump: u64 seed, u64 N, u64 n_steps, then row-major doubles.
  void dump(std::ostream& os) const;
  /// Reads a dump; the grid supplies dt and must match N and n_steps.
  static NoiseTable load(std::istream& is, const GridSpec& grid);

  /// Sums each run of `factor` consecutive rows: the same Brownian paths
  /// sampled on a step factor times longer. n_steps must divide evenly.
  NoiseTable coarsen(int factor) const;

 private:
  NoiseTable() = default;

  std::uint64_t seed_ = 0;
  double half_length_ = 1.0;
  int n_points_ = 0;
  int n_steps_ = 0;
  double dt_ = 0.0;
  std::vector<double> values_;
};

/// Turns table rows into physical-space increments for fixed modal amplitudes.
class NoiseSynthesizer {
 public:
  NoiseSynthesizer(const GridSpec& grid, std::vector<double> amplitudes);

  /// dW(x_j) = amp_0 B_0 + sum_{k>=1} amp_k (B_k cos(xi_k x_j) + B'_k sin(xi_k x_j)).
  void increment(const NoiseTable& table, int step, std::span<double> out);
  const std::vector<double>& amplitudes() const { return amps_; }

 private:
  Spectral spectral_;
  std::vector<double> amps_;
  std::vector<std::complex<double>> coeffs_;
};

/// One spatial increment of the homogeneous field with density d, read from the table.
ScalarField sample_increment(const NoiseTable& table, const SpectralDensity& d, int step);

/// Frequency-space multiplication by F eta(sqrt(eps) xi).
ScalarField apply_Q_eps(const ScalarField& f, const MollifierSpec& moll, double eps, const GridSpec& grid);

/// Amplitudes of Q^eps applied to the frequency-truncated fractional field
/// (no eps^{(1-H)/2} prefactor).
std::vector<double> smoothed_fractional_amplitudes(double hurst, double a_h, const MollifierSpec& moll,
                                                   double eps, const GridSpec& grid);

/// Noise driving one process: amplitudes over a shared table plus the mass of
/// the density the amplitudes represent.
struct NoiseSource {
  std::shared_ptr<const NoiseTable> table;
  std::vector<double> amplitudes;
  double c0 = 0.0;
  std::string description;

  /// Field with the density d itself; c0 = moments(d).c0.
  static NoiseSource from_density(std::shared_ptr<const NoiseTable> table, const SpectralDensity& d,
                                  const GridSpec& grid);
  /// eps^{(1-H)/2} Q^eps w^H, the coupled realization of the rescaled mollified
  /// fractional noise. c0 comes from rescale(mollify(fractional), eps).
  static NoiseSource coupled(std::shared_ptr<const NoiseTable> table, double hurst, double a_h,
                             const MollifierSpec& moll, double eps, const GridSpec& grid);
};

struct CovarianceReport {
  std::vector<double> lags;
  std::vector<double> empirical;
  std::vector<double> reference;  ///< target values (or the second sample's means)
  std::vector<double> stderr_;
  double max_z = 0.0;
  int n_samples = 0;
  bool pass = true;
};

/// Compares the lag-covariance of n_samples synthesized increments (spatially
/// averaged per sample) with dt * sum_k w_k cos(xi_k r); pass iff every lag is
/// within 3 standard errors.
CovarianceReport check_covariance(const SpectralDensity& d, const GridSpec& grid, int n_samples,
                                  std::uint64_t seed, int n_lags = 10, int lag_stride = 1);

/// Empirical covariance of eps^{(1-H)/2} Q^eps (fractional increments) versus
/// increments drawn from rescale(mollify(fractional), eps) on an independent
/// table. Pass iff every lag difference is within 3 combined standard errors.
/// n_samples == 0 yields an empty passing report.
CovarianceReport check_scaling_identity(const MollifierSpec& moll, double hurst, double a_h, double eps,
                                        const GridSpec& grid, int n_samples, std::uint64_t seed,
                                        int n_lags = 10, int lag_stride = 1);

}  // namespace swm
