#include "swm/grid.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <string>

#include "swm/errors.hpp"

namespace swm {

GridSpec GridSpec::make(double half_length, int n_points, double dt, int n_steps) {
  if (!(half_length > 0.0) || !std::isfinite(half_length))
    throw ConfigError("grid: half_length must be positive, got " + std::to_string(half_length));
  if (n_points < 8 || n_points % 2 != 0)
    throw ConfigError("grid: n_points must be even and >= 8, got " + std::to_string(n_points));
  if (!(dt > 0.0) || !std::isfinite(dt))
    throw ConfigError("grid: dt must be positive, got " + std::to_string(dt));
  if (n_steps < 0) throw ConfigError("grid: n_steps must be non-negative");
  return GridSpec(half_length, n_points, dt, n_steps);
}

double GridSpec::dxi() const { return std::numbers::pi / half_length_; }

double GridSpec::nyquist() const { return std::numbers::pi / dx(); }

GridSpec GridSpec::with_time(double dt, int n_steps) const {
  return make(half_length_, n_points_, dt, n_steps);
}

bool GridSpec::same_space(const GridSpec& other) const {
  return half_length_ == other.half_length_ && n_points_ == other.n_points_;
}

// FFTW planning is not thread-safe; plans are created once per size and then
// only executed through the new-array interface, which is.
struct Spectral::Plans {
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
};

namespace {

std::mutex g_plan_mutex;

std::shared_ptr<Spectral::Plans> plans_for(int n) {
  static std::map<int, std::shared_ptr<Spectral::Plans>> cache;
  std::lock_guard<std::mutex> lock(g_plan_mutex);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<double> r(n);
  std::vector<std::complex<double>> c(n / 2 + 1);
  auto plans = std::make_shared<Spectral::Plans>();
  auto* cp = reinterpret_cast<fftw_complex*>(c.data());
  plans->r2c = fftw_plan_dft_r2c_1d(n, r.data(), cp, FFTW_ESTIMATE | FFTW_UNALIGNED);
  plans->c2r = fftw_plan_dft_c2r_1d(n, cp, r.data(), FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (plans->r2c == nullptr || plans->c2r == nullptr)
    throw NumericalError("fftw: failed to plan transforms of size " + std::to_string(n));
  cache.emplace(n, plans);
  return plans;
}

}  // namespace

Spectral::Spectral(const GridSpec& grid)
    : n_(grid.n_points()),
      k_(grid.n_points() / 2 + 1),
      plans_(plans_for(grid.n_points())),
      spec_(grid.n_points() / 2 + 1),
      work_(grid.n_points() / 2 + 1),
      real_work_(grid.n_points()) {
  for (int m = 0; m <= n_ / 2; ++m) k_[m] = grid.wavenumber(m);
}

Spectral::~Spectral() = default;
Spectral::Spectral(Spectral&&) noexcept = default;
Spectral& Spectral::operator=(Spectral&&) noexcept = default;

void Spectral::forward(std::span<const double> f, std::span<std::complex<double>> out) {
  std::copy(f.begin(), f.end(), real_work_.begin());
  fftw_execute_dft_r2c(plans_->r2c, real_work_.data(), reinterpret_cast<fftw_complex*>(out.data()));
}

void Spectral::synthesize(std::span<const std::complex<double>> coeffs, std::span<double> out) {
  // c2r overwrites its input.
  std::copy(coeffs.begin(), coeffs.end(), work_.begin());
  fftw_execute_dft_c2r(plans_->c2r, reinterpret_cast<fftw_complex*>(work_.data()), out.data());
}

void Spectral::inverse(std::span<const std::complex<double>> in, std::span<double> f) {
  synthesize(in, f);
  const double scale = 1.0 / n_;
  for (double& v : f) v *= scale;
}

void Spectral::derivatives(std::span<const double> f, std::span<double> d1, std::span<double> d2) {
  forward(f, spec_);
  const int half = n_ / 2;
  const double scale = 1.0 / n_;
  if (!d1.empty()) {
    for (int m = 0; m < half; ++m) work_[m] = spec_[m] * std::complex<double>(0.0, k_[m] * scale);
    work_[half] = 0.0;
    fftw_execute_dft_c2r(plans_->c2r, reinterpret_cast<fftw_complex*>(work_.data()), d1.data());
  }
  if (!d2.empty()) {
    for (int m = 0; m <= half; ++m) work_[m] = spec_[m] * (-k_[m] * k_[m] * scale);
    fftw_execute_dft_c2r(plans_->c2r, reinterpret_cast<fftw_complex*>(work_.data()), d2.data());
  }
}

void Spectral::derivative(std::span<const double> f, std::span<double> out, int order) {
  if (order == 1) {
    derivatives(f, out, {});
  } else if (order == 2) {
    derivatives(f, {}, out);
  } else {
    throw ConfigError("derivative: order must be 1 or 2, got " + std::to_string(order));
  }
}

void Spectral::apply_multiplier(std::span<const double> f, std::span<const double> mult,
                                std::span<double> out) {
  forward(f, spec_);
  const double scale = 1.0 / n_;
  for (int m = 0; m <= n_ / 2; ++m) work_[m] = spec_[m] * (mult[m] * scale);
  fftw_execute_dft_c2r(plans_->c2r, reinterpret_cast<fftw_complex*>(work_.data()), out.data());
}

double Spectral::hdot_squared(std::span<const double> f, int k, double dx) {
  forward(f, spec_);
  const int half = n_ / 2;
  double sum = 0.0;
  for (int m = 0; m <= half; ++m) {
    if (m == half && k % 2 == 1) continue;
    const double w = (m == 0 || m == half) ? 1.0 : 2.0;
    sum += w * std::norm(spec_[m]) * std::pow(k_[m], 2 * k);
  }
  return dx * sum / n_;
}

ScalarField derivative(const ScalarField& f, const GridSpec& grid, int order) {
  if (static_cast<int>(f.size()) != grid.n_points()) throw ConfigError("derivative: field size mismatch");
  Spectral sp(grid);
  ScalarField out(f.size());
  sp.derivative(f, out, order);
  return out;
}

Vec3Field derivative(const Vec3Field& f, const GridSpec& grid, int order) {
  if (static_cast<int>(f.size()) != grid.n_points()) throw ConfigError("derivative: field size mismatch");
  Spectral sp(grid);
  Vec3Field out(f.size());
  for (int i = 0; i < 3; ++i) sp.derivative(f[i], out[i], order);
  return out;
}

namespace {

double squared_norm(const ScalarField& f, const GridSpec& grid, NormKind kind, int k, Spectral& sp) {
  const double dx = grid.dx();
  switch (kind) {
    case NormKind::L2: {
      double s = 0.0;
      for (double v : f) s += v * v;
      return dx * s;
    }
    case NormKind::Hdot:
      if (k < 0 || k > grid.n_points() / 4)
        throw ConfigError("norm: Hdot order must lie in [0, N/4], got " + std::to_string(k));
      return sp.hdot_squared(f, k, dx);
    case NormKind::H1:
      return squared_norm(f, grid, NormKind::L2, 0, sp) + sp.hdot_squared(f, 1, dx);
    case NormKind::Linf:
      break;
  }
  return 0.0;
}

}  // namespace

double norm(const ScalarField& f, const GridSpec& grid, NormKind kind, int k) {
  if (static_cast<int>(f.size()) != grid.n_points()) throw ConfigError("norm: field size mismatch");
  if (kind == NormKind::Linf) {
    double m = 0.0;
    for (double v : f) m = std::max(m, std::abs(v));
    return m;
  }
  Spectral sp(grid);
  return std::sqrt(squared_norm(f, grid, kind, k, sp));
}

double norm(const Vec3Field& f, const GridSpec& grid, NormKind kind, int k) {
  if (static_cast<int>(f.size()) != grid.n_points()) throw ConfigError("norm: field size mismatch");
  if (kind == NormKind::Linf) {
    double m = 0.0;
    for (std::size_t j = 0; j < f.size(); ++j) {
      const auto p = f.at(j);
      m = std::max(m, std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]));
    }
    return m;
  }
  Spectral sp(grid);
  double s = 0.0;
  for (int i = 0; i < 3; ++i) s += squared_norm(f[i], grid, kind, k, sp);
  return std::sqrt(s);
}

double inner(const ScalarField& f, const ScalarField& g, const GridSpec& grid) {
  if (f.size() != g.size() || static_cast<int>(f.size()) != grid.n_points())
    throw ConfigError("inner: field length mismatch");
  double s = 0.0;
  for (std::size_t j = 0; j < f.size(); ++j) s += f[j] * g[j];
  return grid.dx() * s;
}

double inner(const Vec3Field& f, const Vec3Field& g, const GridSpec& grid) {
  double s = 0.0;
  for (int i = 0; i < 3; ++i) s += inner(f[i], g[i], grid);
  return s;
}

}  // namespace swm
