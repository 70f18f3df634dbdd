#include <cmath>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "swm/errors.hpp"
#include "swm/noise.hpp"

using namespace swm;

namespace {
// Gamma(1/4) and Gamma(5/4): the mass and second moment of exp(-xi^2)|xi|^{-1/2}.
constexpr double kC0 = 3.6256099082219087;
constexpr double kC1 = 0.9064024770554773;

SpectralDensity gaussian_h075() { return mollify(make_fractional_density(0.75, 1.0), MollifierSpec::gaussian()); }
}  // namespace

TEST_CASE("fractional density") {
  CHECK_THROWS_AS(make_fractional_density(0.4), ConfigError);
  CHECK_THROWS_AS(make_fractional_density(1.0), ConfigError);
  CHECK_THROWS_AS(make_fractional_density(0.7, 0.0), ConfigError);
  const auto white = make_fractional_density(0.5);
  CHECK(white(3.7) == 1.0);
  CHECK(white(0.0) == 1.0);
  const auto d = make_fractional_density(0.75);
  CHECK(d(2.0) == doctest::Approx(0.7071067811865476).epsilon(1e-14));
  for (double x : {0.1, 1.3, 7.0}) CHECK(d(x) == d(-x));
  const auto m = moments(d);
  CHECK_FALSE(m.finite);
  CHECK(std::isinf(m.c0));
  CHECK(std::isinf(m.c1));
  CHECK(d.kind() == DensityKind::Fractional);
}

TEST_CASE("gaussian-mollified moments") {
  const auto d = gaussian_h075();
  const auto m = moments(d);
  CHECK(m.finite);
  CHECK(m.c0 == doctest::Approx(kC0).epsilon(1e-8));
  CHECK(m.c1 == doctest::Approx(kC1).epsilon(1e-8));
  CHECK(enhanced_friction(1.0, m) == doctest::Approx(1.0 + kC0 / 2).epsilon(1e-8));
}

TEST_CASE("indicator density moments") {
  const auto d = make_generic_density("indicator", [](double x) { return x <= 1.0 ? 1.0 : 0.0; }, {1.0});
  const auto m = moments(d);
  CHECK(m.c0 == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(m.c1 == doctest::Approx(2.0 / 3.0).epsilon(1e-10));
  const auto same = mollify(d, MollifierSpec::identity());
  for (double x : {0.0, 0.5, 0.99, 1.5}) CHECK(same(x) == d(x));
}

TEST_CASE("mollifier validation") {
  auto weak = MollifierSpec::gaussian();
  weak.b = -1.0;  // not enough decay for H = 0.75
  CHECK_THROWS_AS(mollify(make_fractional_density(0.75), weak), ConfigError);
  auto rough = MollifierSpec::gaussian();
  rough.a = 0.1;
  CHECK_THROWS_AS(mollify(make_fractional_density(0.75), rough), ConfigError);
  auto off = MollifierSpec::gaussian();
  off.fourier = [](double x) { return 0.5 * std::exp(-x * x); };
  CHECK_THROWS_AS(mollify(make_fractional_density(0.75), off), ConfigError);
  CHECK_THROWS_AS(mollify(make_fractional_density(0.75), MollifierSpec::identity()), ConfigError);
  CHECK_THROWS_AS(MollifierSpec::by_name("box"), ConfigError);
}

TEST_CASE("rescaling preserves mass and scales the second moment") {
  const auto base = gaussian_h075();
  const auto m = moments(base);
  for (double eps : {0.04, 0.25, 1.0}) {
    const auto r = moments(rescale(base, eps));
    CHECK(r.c0 == doctest::Approx(m.c0).epsilon(1e-6));
    CHECK(r.c1 * eps == doctest::Approx(m.c1).epsilon(1e-6));
  }
  CHECK(moments(rescale(base, 0.25)).c1 == doctest::Approx(4 * kC1).epsilon(1e-8));
  const auto one = rescale(base, 1.0);
  for (double x : {0.3, 1.0, 2.2}) CHECK(one(x) == base(x));
  CHECK_THROWS_AS(rescale(base, 0.0), ConfigError);
  CHECK_THROWS_AS(rescale(base, -1.0), ConfigError);
  CHECK_THROWS_AS(rescale(make_fractional_density(0.75), 0.5), ConfigError);
}

TEST_CASE("cell weights sum to the mass") {
  const auto g = GridSpec::make(20.0, 512, 0.01, 1);
  const auto w = cell_weights(gaussian_h075(), g);
  double total = w[0];
  for (std::size_t k = 1; k < w.size(); ++k) total += 2 * w[k];
  CHECK(total == doctest::Approx(kC0).epsilon(1e-8));
  CHECK(discrete_mass(modal_amplitudes(gaussian_h075(), g)) == doctest::Approx(total).epsilon(1e-12));
}

TEST_CASE("noise table determinism and dump") {
  const auto g = GridSpec::make(5.0, 32, 0.01, 20);
  NoiseTable a(7, g), b(7, g), c(8, g);
  CHECK(a.fingerprint() == b.fingerprint());
  CHECK(a.fingerprint() != c.fingerprint());
  CHECK_THROWS_AS(a.row(20), ConfigError);
  CHECK_THROWS_AS(a.row(-1), ConfigError);
  std::stringstream ss;
  a.dump(ss);
  CHECK(ss.str().size() == 24 + 8 * 32 * 20);
  auto back = NoiseTable::load(ss, g);
  CHECK(back.seed() == 7);
  CHECK(back.fingerprint() == a.fingerprint());
  std::stringstream bad(ss.str().substr(0, 30));
  CHECK_THROWS_AS(NoiseTable::load(bad, g), ConfigError);
  std::stringstream again;
  a.dump(again);
  CHECK_THROWS_AS(NoiseTable::load(again, g.with_time(0.01, 19)), ConfigError);
}

TEST_CASE("noise table entries have variance dt") {
  const auto g = GridSpec::make(5.0, 64, 0.04, 500);
  NoiseTable t(11, g);
  double s = 0, s2 = 0;
  for (double v : t.data()) {
    s += v;
    s2 += v * v;
  }
  const double n = static_cast<double>(t.data().size());
  const double mean = s / n;
  const double var = s2 / n - mean * mean;
  CHECK(std::abs(mean) < 3 * std::sqrt(0.04 / n));
  // Var of the sample variance of normals is 2 sigma^4 / n.
  CHECK(std::abs(var - 0.04) < 3 * 0.04 * std::sqrt(2.0 / n));
}

TEST_CASE("sampled increments: pointwise variance, covariance, zero density") {
  const auto g = GridSpec::make(10.0, 128, 0.01, 10000);
  const auto d = gaussian_h075();
  NoiseTable t(2024, g);
  const auto amp = modal_amplitudes(d, g);
  NoiseSynthesizer synth(g, amp);
  ScalarField f(128);
  double s2 = 0, s4 = 0;
  for (int s = 0; s < g.n_steps(); ++s) {
    synth.increment(t, s, f);
    s2 += f[40] * f[40];
    s4 += f[40] * f[40] * f[40] * f[40];
  }
  const double n = g.n_steps();
  const double var = s2 / n;
  const double se = std::sqrt((s4 / n - var * var) / n);
  const double target = g.dt() * discrete_mass(amp);
  CHECK(target == doctest::Approx(g.dt() * kC0).epsilon(1e-4));
  CHECK(std::abs(var - target) < 3 * se);

  const auto rep = check_covariance(d, g, 10000, 99, 10, 2);
  CHECK(rep.lags.size() == 10);
  CHECK(rep.pass);
  CHECK(rep.reference[0] == doctest::Approx(target).epsilon(1e-12));

  const auto zero = make_generic_density("zero", [](double) { return 0.0; });
  for (double v : sample_increment(t, zero, 3)) CHECK(v == 0.0);
  CHECK_THROWS_AS(sample_increment(t, d, 10000), ConfigError);
}

TEST_CASE("sample_increment matches the explicit mode sum") {
  const auto g = GridSpec::make(3.0, 16, 0.5, 2);
  const auto d = make_generic_density("bump", [](double x) { return std::exp(-x); });
  NoiseTable t(5, g);
  const auto f = sample_increment(t, d, 1);
  const auto amp = modal_amplitudes(d, g);
  const auto r = t.row(1);
  for (int j = 0; j < 16; ++j) {
    double ref = amp[0] * r[0];
    for (int k = 1; k < 8; ++k) {
      const double xi = g.wavenumber(k);
      ref += amp[k] * (r[2 * k] * std::cos(xi * g.x(j)) + r[2 * k + 1] * std::sin(xi * g.x(j)));
    }
    CHECK(f[j] == doctest::Approx(ref).epsilon(1e-12));
  }
}

TEST_CASE("stationarity: lag covariance does not depend on the base point") {
  const auto g = GridSpec::make(8.0, 64, 1.0, 8000);
  NoiseTable t(314, g);
  NoiseSynthesizer synth(g, modal_amplitudes(gaussian_h075(), g));
  ScalarField f(64);
  const int lag = 3;
  double a = 0, a2 = 0, b = 0, b2 = 0;
  for (int s = 0; s < g.n_steps(); ++s) {
    synth.increment(t, s, f);
    const double p = f[5] * f[5 + lag];
    const double q = f[40] * f[40 + lag];
    a += p, a2 += p * p, b += q, b2 += q * q;
  }
  const double n = g.n_steps();
  const double ma = a / n, mb = b / n;
  const double se = std::sqrt((a2 / n - ma * ma) / n + (b2 / n - mb * mb) / n);
  CHECK(std::abs(ma - mb) < 3 * se);
}

TEST_CASE("Q_eps") {
  const double L = 4.0;
  const auto g = GridSpec::make(L, 64, 0.01, 1);
  const auto id = MollifierSpec::identity();
  const auto gs = MollifierSpec::gaussian();
  const auto f = sample(g, [](double x) { return std::exp(-x * x) * std::sin(3 * x); });
  const auto same = apply_Q_eps(f, id, 0.3, g);
  for (int j = 0; j < 64; ++j) CHECK(same[j] == doctest::Approx(f[j]).epsilon(1e-12).scale(1.0));
  const ScalarField c(64, 1.7);
  for (double v : apply_Q_eps(c, gs, 0.5, g)) CHECK(v == doctest::Approx(1.7).epsilon(1e-13));
  const int m = 5;
  const double xi = std::numbers::pi * m / L;
  const auto mode = sample(g, [&](double x) { return std::cos(xi * x); });
  const auto q = apply_Q_eps(mode, gs, 0.2, g);
  const double factor = std::exp(-0.5 * 0.2 * xi * xi);
  for (int j = 0; j < 64; ++j) CHECK(q[j] == doctest::Approx(factor * mode[j]).epsilon(1e-12).scale(1.0));
}

TEST_CASE("coupled noise source") {
  const auto g = GridSpec::make(10.0, 256, 0.01, 1);
  auto t = std::make_shared<const NoiseTable>(1, g);
  const auto src = NoiseSource::coupled(t, 0.75, 1.0, MollifierSpec::gaussian(), 0.25, g);
  CHECK(src.c0 == doctest::Approx(kC0).epsilon(1e-8));
  CHECK(discrete_mass(src.amplitudes) == doctest::Approx(kC0).epsilon(1e-2));
}

TEST_CASE("scaling identity") {
  const auto g = GridSpec::make(10.0, 128, 0.01, 1);
  const auto moll = MollifierSpec::gaussian();
  const auto one = check_scaling_identity(moll, 0.75, 1.0, 1.0, g, 4000, 17);
  CHECK(one.pass);
  const auto rep = check_scaling_identity(moll, 0.75, 1.0, 0.25, g, 10000, 17);
  CHECK(rep.pass);
  const auto empty = check_scaling_identity(moll, 0.75, 1.0, 0.25, g, 0, 17);
  CHECK(empty.pass);
  CHECK(empty.lags.empty());
}
