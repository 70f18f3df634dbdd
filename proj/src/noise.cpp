#include "swm/noise.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "swm/errors.hpp"
#include "swm/quadrature.hpp"

namespace swm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

MollifierSpec MollifierSpec::gaussian() {
  return {"gaussian", [](double x) { return std::exp(-0.5 * x * x); }, 2.0, -kInf};
}

MollifierSpec MollifierSpec::identity() {
  return {"identity", [](double) { return 1.0; }, kInf, 0.0};
}

MollifierSpec MollifierSpec::by_name(const std::string& name) {
  if (name == "gaussian") return gaussian();
  if (name == "identity") return identity();
  throw ConfigError("unknown mollifier '" + name + "' (expected gaussian or identity)");
}

std::string to_string(DensityKind kind) {
  switch (kind) {
    case DensityKind::Generic: return "generic";
    case DensityKind::Fractional: return "fractional";
    case DensityKind::Mollified: return "mollified";
    case DensityKind::Rescaled: return "rescaled";
  }
  return "?";
}

SpectralDensity make_generic_density(std::string name, std::function<double(double)> m,
                                     std::vector<double> breakpoints) {
  if (!m) throw ConfigError("generic density needs an evaluator");
  SpectralDensity d;
  d.eval_ = std::move(m);
  d.kind_ = DensityKind::Generic;
  d.name_ = std::move(name);
  std::sort(breakpoints.begin(), breakpoints.end());
  d.breakpoints_ = std::move(breakpoints);
  return d;
}

SpectralDensity make_fractional_density(double hurst, double a_h) {
  if (!(hurst >= 0.5 && hurst < 1.0))
    throw ConfigError("fractional density: H must lie in [1/2, 1), got " + fmt(hurst));
  if (!(a_h > 0.0) || !std::isfinite(a_h))
    throw ConfigError("fractional density: a_H must be positive, got " + fmt(a_h));
  SpectralDensity d;
  const double p = 1.0 - 2.0 * hurst;
  if (p == 0.0) {
    d.eval_ = [a_h](double) { return a_h; };
  } else {
    d.eval_ = [a_h, p](double x) { return x == 0.0 ? kInf : a_h * std::pow(x, p); };
  }
  d.kind_ = DensityKind::Fractional;
  d.name_ = "fractional(H=" + fmt(hurst) + ")";
  d.hurst_ = hurst;
  d.a_h_ = a_h;
  d.finite_mass_ = false;
  d.breakpoints_ = {1.0};
  return d;
}

SpectralDensity mollify(const SpectralDensity& base, const MollifierSpec& moll) {
  if (!moll.fourier) throw ConfigError("mollifier '" + moll.name + "' has no transform");
  if (std::abs(moll.fourier(0.0) - 1.0) > 1e-12)
    throw ConfigError("mollifier '" + moll.name + "': transform at 0 must be 1, got " + fmt(moll.fourier(0.0)));
  if (base.kind() == DensityKind::Fractional) {
    const double h = *base.hurst();
    if (moll.a < h - 0.5)
      throw ConfigError("mollifier '" + moll.name + "': need a >= H - 1/2 = " + fmt(h - 0.5) + ", got a = " +
                        fmt(moll.a));
    if (!(moll.b < h - 2.0))
      throw ConfigError("mollifier '" + moll.name + "': need b < H - 2 = " + fmt(h - 2.0) + ", got b = " +
                        fmt(moll.b));
  } else if (!base.finite_mass()) {
    throw ConfigError("mollify: base density '" + base.name() + "' has infinite mass and no Hurst index");
  }
  SpectralDensity d = base;
  auto f = moll.fourier;
  auto b = base.eval_;
  d.eval_ = [f, b](double x) {
    const double g = f(x);
    if (g == 0.0) return 0.0;
    return g * g * b(x);
  };
  d.kind_ = DensityKind::Mollified;
  d.name_ = moll.name + "*" + base.name();
  d.finite_mass_ = true;
  d.mollifier_ = moll;
  return d;
}

SpectralDensity rescale(const SpectralDensity& base, double eps) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw ConfigError("rescale: eps must be positive, got " + fmt(eps));
  if (!base.finite_mass()) throw ConfigError("rescale: base density '" + base.name() + "' has infinite mass");
  SpectralDensity d = base;
  const double s = std::sqrt(eps);
  auto b = base.eval_;
  d.eval_ = [s, b](double x) { return s * b(s * x); };
  d.kind_ = DensityKind::Rescaled;
  d.name_ = base.name() + "@eps=" + fmt(eps);
  d.epsilon_ = base.epsilon() * eps;
  for (double& p : d.breakpoints_) p /= s;
  return d;
}

Moments moments(const SpectralDensity& d) {
  if (!d.finite_mass()) return {kInf, kInf, false};
  auto m0 = [&d](double x) { return d(x); };
  auto m2 = [&d](double x) { return x * x * d(x); };
  Moments out;
  out.c0 = 2.0 * quad::integrate_half_line(m0, 0.0, d.breakpoints());
  out.c1 = 2.0 * quad::integrate_half_line(m2, 0.0, d.breakpoints());
  if (!std::isfinite(out.c0) || !std::isfinite(out.c1))
    throw NumericalError("moments: non-finite result for density '" + d.name() + "'");
  return out;
}

double enhanced_friction(double gamma, const Moments& m) { return gamma + 0.5 * m.c0; }

std::vector<double> cell_weights(const SpectralDensity& d, const GridSpec& grid) {
  const int half = grid.n_points() / 2;
  const double dxi = grid.dxi();
  auto m = [&d](double x) { return d(x); };
  std::vector<double> w(half);
  w[0] = 2.0 * quad::integrate(m, 0.0, 0.5 * dxi);
  for (int k = 1; k < half; ++k) {
    const double lo = (k - 0.5) * dxi;
    const double hi = (k + 0.5) * dxi;
    if (d(lo) == 0.0 && d(hi) == 0.0 && d(0.5 * (lo + hi)) == 0.0) {
      w[k] = 0.0;
      continue;
    }
    w[k] = quad::integrate(m, lo, hi);
  }
  return w;
}

std::vector<double> modal_amplitudes(const SpectralDensity& d, const GridSpec& grid) {
  auto w = cell_weights(d, grid);
  std::vector<double> amp(w.size());
  amp[0] = std::sqrt(w[0]);
  for (std::size_t k = 1; k < w.size(); ++k) amp[k] = std::sqrt(2.0 * w[k]);
  return amp;
}

double discrete_mass(std::span<const double> amplitudes) {
  double s = 0.0;
  for (double a : amplitudes) s += a * a;
  return s;
}

NoiseTable::NoiseTable(std::uint64_t seed, const GridSpec& grid)
    : seed_(seed), half_length_(grid.half_length()), n_points_(grid.n_points()), n_steps_(grid.n_steps()),
      dt_(grid.dt()) {
  values_.resize(static_cast<std::size_t>(n_points_) * n_steps_);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double s = std::sqrt(dt_);
  for (double& v : values_) v = s * normal(rng);
}

NoiseTable NoiseTable::coarsen(int factor) const {
  if (factor < 1 || n_steps_ % factor != 0)
    throw ConfigError("noise table: coarsening factor must divide n_steps = " + std::to_string(n_steps_));
  NoiseTable out;
  out.seed_ = seed_;
  out.half_length_ = half_length_;
  out.n_points_ = n_points_;
  out.n_steps_ = n_steps_ / factor;
  out.dt_ = dt_ * factor;
  out.values_.assign(static_cast<std::size_t>(out.n_points_) * out.n_steps_, 0.0);
  for (int m = 0; m < n_steps_; ++m) {
    const auto r = row(m);
    double* dst = out.values_.data() + static_cast<std::size_t>(m / factor) * n_points_;
    for (int j = 0; j < n_points_; ++j) dst[j] += r[j];
  }
  return out;
}

std::span<const double> NoiseTable::row(int step) const {
  if (step < 0 || step >= n_steps_)
    throw ConfigError("noise table: step " + std::to_string(step) + " outside [0, " + std::to_string(n_steps_) +
                      ")");
  return std::span<const double>(values_).subspan(static_cast<std::size_t>(step) * n_points_, n_points_);
}

std::uint64_t NoiseTable::fingerprint() const {
  std::uint64_t h = 1469598103934665603ull;
  for (double v : values_) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xffu;
      h *= 1099511628211ull;
    }
  }
  return h;
}

namespace {

void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xffu);
  os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw ConfigError("noise table dump: truncated input");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

void NoiseTable::dump(std::ostream& os) const {
  put_u64(os, seed_);
  put_u64(os, static_cast<std::uint64_t>(n_points_));
  put_u64(os, static_cast<std::uint64_t>(n_steps_));
  for (double v : values_) put_u64(os, std::bit_cast<std::uint64_t>(v));
}

NoiseTable NoiseTable::load(std::istream& is, const GridSpec& grid) {
  NoiseTable t;
  t.seed_ = get_u64(is);
  const auto n = get_u64(is);
  const auto steps = get_u64(is);
  if (n != static_cast<std::uint64_t>(grid.n_points()) || steps != static_cast<std::uint64_t>(grid.n_steps()))
    throw ConfigError("noise table dump: header (N=" + std::to_string(n) + ", n_steps=" + std::to_string(steps) +
                      ") does not match the grid");
  t.half_length_ = grid.half_length();
  t.n_points_ = grid.n_points();
  t.n_steps_ = grid.n_steps();
  t.dt_ = grid.dt();
  t.values_.resize(static_cast<std::size_t>(t.n_points_) * t.n_steps_);
  for (double& v : t.values_) v = std::bit_cast<double>(get_u64(is));
  return t;
}

NoiseSynthesizer::NoiseSynthesizer(const GridSpec& grid, std::vector<double> amplitudes)
    : spectral_(grid), amps_(std::move(amplitudes)), coeffs_(grid.n_points() / 2 + 1) {
  if (static_cast<int>(amps_.size()) != grid.n_points() / 2)
    throw ConfigError("noise synthesizer: expected N/2 amplitudes");
}

void NoiseSynthesizer::increment(const NoiseTable& table, int step, std::span<double> out) {
  const auto r = table.row(step);
  const int half = static_cast<int>(amps_.size());
  if (table.n_points() != 2 * half) throw ConfigError("noise synthesizer: table and grid sizes differ");
  // x_j = -L + j dx shifts mode k by (-1)^k relative to FFT phase.
  coeffs_[0] = amps_[0] * r[0];
  for (int k = 1; k < half; ++k) {
    const double s = (k % 2 == 0 ? 0.5 : -0.5) * amps_[k];
    coeffs_[k] = std::complex<double>(s * r[2 * k], -s * r[2 * k + 1]);
  }
  coeffs_[half] = 0.0;
  spectral_.synthesize(coeffs_, out);
}

ScalarField sample_increment(const NoiseTable& table, const SpectralDensity& d, int step) {
  const GridSpec grid = table.grid();
  NoiseSynthesizer synth(grid, modal_amplitudes(d, grid));
  ScalarField out(grid.n_points());
  synth.increment(table, step, out);
  return out;
}

ScalarField apply_Q_eps(const ScalarField& f, const MollifierSpec& moll, double eps, const GridSpec& grid) {
  if (static_cast<int>(f.size()) != grid.n_points()) throw ConfigError("apply_Q_eps: field size mismatch");
  if (!(eps > 0.0)) throw ConfigError("apply_Q_eps: eps must be positive");
  Spectral sp(grid);
  const double s = std::sqrt(eps);
  std::vector<double> mult(grid.n_points() / 2 + 1);
  for (int m = 0; m <= grid.n_points() / 2; ++m) mult[m] = moll.fourier(s * grid.wavenumber(m));
  ScalarField out(f.size());
  sp.apply_multiplier(f, mult, out);
  return out;
}

std::vector<double> smoothed_fractional_amplitudes(double hurst, double a_h, const MollifierSpec& moll, double eps,
                                                   const GridSpec& grid) {
  auto amp = modal_amplitudes(make_fractional_density(hurst, a_h), grid);
  const double s = std::sqrt(eps);
  for (std::size_t k = 0; k < amp.size(); ++k) amp[k] *= moll.fourier(s * grid.wavenumber(static_cast<int>(k)));
  return amp;
}

NoiseSource NoiseSource::from_density(std::shared_ptr<const NoiseTable> table, const SpectralDensity& d,
                                      const GridSpec& grid) {
  NoiseSource src;
  src.table = std::move(table);
  src.amplitudes = modal_amplitudes(d, grid);
  src.c0 = moments(d).c0;
  src.description = d.name();
  return src;
}

NoiseSource NoiseSource::coupled(std::shared_ptr<const NoiseTable> table, double hurst, double a_h,
                                 const MollifierSpec& moll, double eps, const GridSpec& grid) {
  NoiseSource src;
  src.table = std::move(table);
  src.amplitudes = smoothed_fractional_amplitudes(hurst, a_h, moll, eps, grid);
  const double pre = std::pow(eps, 0.5 * (1.0 - hurst));
  for (double& a : src.amplitudes) a *= pre;
  src.c0 = moments(rescale(mollify(make_fractional_density(hurst, a_h), moll), eps)).c0;
  src.description = "eps^((1-H)/2) Q^eps w^H, H=" + fmt(hurst) + ", eps=" + fmt(eps) + ", " + moll.name;
  return src;
}

namespace {

// Per-sample spatially averaged lag products (1/N) sum_j f_j f_{j+l}.
struct LagAccumulator {
  std::vector<double> sum, sumsq;
  int count = 0;

  explicit LagAccumulator(int n_lags) : sum(n_lags, 0.0), sumsq(n_lags, 0.0) {}

  void add(const ScalarField& f, int stride) {
    const int n = static_cast<int>(f.size());
    for (std::size_t l = 0; l < sum.size(); ++l) {
      const int shift = static_cast<int>(l) * stride;
      double c = 0.0;
      for (int j = 0; j < n; ++j) c += f[j] * f[(j + shift) % n];
      c /= n;
      sum[l] += c;
      sumsq[l] += c * c;
    }
    ++count;
  }
  double mean(std::size_t l) const { return sum[l] / count; }
  double se(std::size_t l) const {
    if (count < 2) return 0.0;
    const double m = mean(l);
    const double var = std::max(0.0, (sumsq[l] - count * m * m) / (count - 1));
    return std::sqrt(var / count);
  }
};

void validate_lags(const GridSpec& grid, int n_lags, int stride) {
  if (n_lags < 1 || stride < 1 || (n_lags - 1) * stride >= grid.n_points())
    throw ConfigError("covariance check: lags must be positive and shorter than the grid");
}

}  // namespace

CovarianceReport check_covariance(const SpectralDensity& d, const GridSpec& grid, int n_samples, std::uint64_t seed,
                                  int n_lags, int lag_stride) {
  validate_lags(grid, n_lags, lag_stride);
  CovarianceReport rep;
  rep.n_samples = n_samples;
  if (n_samples <= 0) return rep;
  const auto w = cell_weights(d, grid);
  std::vector<double> amp(w.size());
  amp[0] = std::sqrt(w[0]);
  for (std::size_t k = 1; k < w.size(); ++k) amp[k] = std::sqrt(2.0 * w[k]);

  const GridSpec g = grid.with_time(grid.dt(), n_samples);
  NoiseTable table(seed, g);
  NoiseSynthesizer synth(g, amp);
  ScalarField f(grid.n_points());
  LagAccumulator acc(n_lags);
  for (int s = 0; s < n_samples; ++s) {
    synth.increment(table, s, f);
    acc.add(f, lag_stride);
  }
  for (int l = 0; l < n_lags; ++l) {
    const double r = l * lag_stride * grid.dx();
    double target = w[0];
    for (std::size_t k = 1; k < w.size(); ++k) target += 2.0 * w[k] * std::cos(grid.wavenumber(static_cast<int>(k)) * r);
    target *= grid.dt();
    rep.lags.push_back(r);
    rep.empirical.push_back(acc.mean(l));
    rep.reference.push_back(target);
    rep.stderr_.push_back(acc.se(l));
    const double se = acc.se(l);
    const double z = se > 0.0 ? std::abs(acc.mean(l) - target) / se : (acc.mean(l) == target ? 0.0 : kInf);
    rep.max_z = std::max(rep.max_z, z);
  }
  rep.pass = rep.max_z <= 3.0;
  return rep;
}

CovarianceReport check_scaling_identity(const MollifierSpec& moll, double hurst, double a_h, double eps,
                                        const GridSpec& grid, int n_samples, std::uint64_t seed, int n_lags,
                                        int lag_stride) {
  validate_lags(grid, n_lags, lag_stride);
  const auto frac = make_fractional_density(hurst, a_h);
  CovarianceReport rep;
  rep.n_samples = n_samples;
  if (n_samples <= 0) return rep;

  const GridSpec g = grid.with_time(grid.dt(), n_samples);
  NoiseTable table_a(seed, g);
  NoiseTable table_b(seed ^ 0x9e3779b97f4a7c15ull, g);
  NoiseSynthesizer frac_synth(g, modal_amplitudes(frac, g));
  NoiseSynthesizer direct_synth(g, modal_amplitudes(rescale(mollify(frac, moll), eps), g));

  const double pre = std::pow(eps, 0.5 * (1.0 - hurst));
  ScalarField f(grid.n_points());
  LagAccumulator acc_a(n_lags), acc_b(n_lags);
  for (int s = 0; s < n_samples; ++s) {
    frac_synth.increment(table_a, s, f);
    ScalarField q = apply_Q_eps(f, moll, eps, g);
    for (double& v : q) v *= pre;
    acc_a.add(q, lag_stride);
    direct_synth.increment(table_b, s, f);
    acc_b.add(f, lag_stride);
  }
  for (int l = 0; l < n_lags; ++l) {
    rep.lags.push_back(l * lag_stride * grid.dx());
    rep.empirical.push_back(acc_a.mean(l));
    rep.reference.push_back(acc_b.mean(l));
    const double se = std::hypot(acc_a.se(l), acc_b.se(l));
    rep.stderr_.push_back(se);
    const double diff = std::abs(acc_a.mean(l) - acc_b.mean(l));
    rep.max_z = std::max(rep.max_z, se > 0.0 ? diff / se : (diff == 0.0 ? 0.0 : kInf));
  }
  rep.pass = rep.max_z <= 3.0;
  return rep;
}

}  // namespace swm
