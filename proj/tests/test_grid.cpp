#include <cmath>
#include <numbers>

#include "doctest.h"
#include "swm/errors.hpp"
#include "swm/grid.hpp"

using namespace swm;

namespace {
const double kPi = std::numbers::pi;
}

TEST_CASE("grid rejects bad shapes") {
  CHECK_THROWS_AS(GridSpec::make(1.0, 7, 0.1, 1), ConfigError);
  CHECK_THROWS_AS(GridSpec::make(1.0, 6, 0.1, 1), ConfigError);
  CHECK_THROWS_AS(GridSpec::make(0.0, 16, 0.1, 1), ConfigError);
  CHECK_THROWS_AS(GridSpec::make(1.0, 16, -0.1, 1), ConfigError);
  const auto g = GridSpec::make(3.0, 12, 0.1, 5);
  CHECK(g.dx() == 0.5);
  CHECK(g.horizon() == doctest::Approx(0.5));
  CHECK(g.wavenumber(-6) == doctest::Approx(-2.0 * kPi));
}

TEST_CASE("spectral derivative of an eigenfunction") {
  const double L = 4.0;
  const auto g = GridSpec::make(L, 64, 0.01, 1);
  const auto f = sample(g, [&](double x) { return std::sin(kPi * x / L); });
  const auto d = derivative(f, g, 1);
  for (int j = 0; j < g.n_points(); ++j) CHECK(d[j] == doctest::Approx(kPi / L * std::cos(kPi * g.x(j) / L)).epsilon(1e-12).scale(1.0));
  const ScalarField c(64, 2.5);
  for (double v : derivative(c, g, 2)) CHECK(std::abs(v) < 1e-12);
  CHECK_THROWS_AS(derivative(f, g, 3), ConfigError);
}

TEST_CASE("second derivative of a gaussian") {
  const auto g = GridSpec::make(10.0, 256, 0.01, 1);
  const auto f = sample(g, [](double x) { return std::exp(-x * x); });
  const auto d = derivative(f, g, 2);
  double err = 0.0;
  for (int j = 0; j < g.n_points(); ++j) {
    const double x = g.x(j);
    err = std::max(err, std::abs(d[j] - (4 * x * x - 2) * std::exp(-x * x)));
  }
  CHECK(err < 1e-8);
}

TEST_CASE("norms") {
  const double L = 5.0;
  const auto g = GridSpec::make(L, 128, 0.01, 1);
  const ScalarField zero(128, 0.0);
  for (auto k : {NormKind::L2, NormKind::H1, NormKind::Hdot, NormKind::Linf}) CHECK(norm(zero, g, k) == 0.0);
  const auto c = sample(g, [&](double x) { return std::cos(kPi * x / L); });
  CHECK(norm(c, g, NormKind::L2) == doctest::Approx(std::sqrt(L)).epsilon(1e-13));
  CHECK(norm(c, g, NormKind::Hdot, 1) == doctest::Approx(kPi / L * std::sqrt(L)).epsilon(1e-12));
  CHECK(norm(c, g, NormKind::Hdot, 2) == doctest::Approx(kPi * kPi / (L * L) * std::sqrt(L)).epsilon(1e-12));
  CHECK(norm(c, g, NormKind::H1) == doctest::Approx(std::sqrt(L + kPi * kPi / L)).epsilon(1e-12));
  CHECK(norm(c, g, NormKind::Linf) == doctest::Approx(1.0));
  CHECK_THROWS_AS(norm(c, g, NormKind::Hdot, 33), ConfigError);
}

TEST_CASE("Hdot1 of a geodesic bump matches the quadrature value") {
  const auto g = GridSpec::make(10.0, 256, 0.01, 1);
  Vec3Field u(256);
  for (int j = 0; j < 256; ++j) {
    const double th = 1.5 * std::exp(-g.x(j) * g.x(j));
    u.set(j, {std::cos(th), std::sin(th), 0.0});
  }
  // sqrt(int (theta')^2) for theta = 1.5 exp(-x^2), from scipy quad.
  CHECK(norm(u, g, NormKind::Hdot, 1) == doctest::Approx(1.6792727023803713).epsilon(1e-10));
}

TEST_CASE("inner product, orthogonality, Parseval and integration by parts") {
  const double L = 3.0;
  const auto g = GridSpec::make(L, 96, 0.01, 1);
  const auto s1 = sample(g, [&](double x) { return std::sin(kPi * x / L); });
  const auto c3 = sample(g, [&](double x) { return std::cos(3 * kPi * x / L); });
  CHECK(inner(s1, s1, g) == doctest::Approx(L).epsilon(1e-13));
  CHECK(std::abs(inner(s1, c3, g)) < 1e-13);
  CHECK(inner(c3, c3, g) == doctest::Approx(std::pow(norm(c3, g, NormKind::L2), 2)).epsilon(1e-13));
  CHECK_THROWS_AS(inner(s1, ScalarField(10, 0.0), g), ConfigError);

  const auto f = sample(g, [](double x) { return std::exp(-x * x) * (1 + x); });
  const auto h = sample(g, [](double x) { return std::exp(-2 * x * x) * std::cos(x); });
  const double lhs = inner(derivative(f, g, 1), h, g);
  const double rhs = -inner(f, derivative(h, g, 1), g);
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));

  // Parseval through the raw transform.
  Spectral sp(g);
  std::vector<std::complex<double>> F(g.n_points() / 2 + 1);
  sp.forward(f, F);
  double s = std::norm(F[0]) + std::norm(F.back());
  for (std::size_t m = 1; m + 1 < F.size(); ++m) s += 2 * std::norm(F[m]);
  CHECK(g.dx() * s / g.n_points() == doctest::Approx(std::pow(norm(f, g, NormKind::L2), 2)).epsilon(1e-10));
}

TEST_CASE("derivative is linear") {
  const auto g = GridSpec::make(6.0, 64, 0.01, 1);
  const auto f = sample(g, [](double x) { return std::exp(-x * x); });
  const auto h = sample(g, [](double x) { return std::sin(x) * std::exp(-0.5 * x * x); });
  ScalarField comb(64);
  for (int j = 0; j < 64; ++j) comb[j] = 2.0 * f[j] - 3.0 * h[j];
  const auto d = derivative(comb, g, 2);
  const auto df = derivative(f, g, 2);
  const auto dh = derivative(h, g, 2);
  for (int j = 0; j < 64; ++j) CHECK(std::abs(d[j] - (2.0 * df[j] - 3.0 * dh[j])) < 1e-12);
}
