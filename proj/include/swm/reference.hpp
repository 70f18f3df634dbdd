// Scalar reference solvers for great-circle data. They share nothing with the
// library except the FFT-backed derivative.
#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "swm/grid.hpp"

namespace swm::reference {

/// Exact Fourier-mode solution of gamma0 th_t = th_xx on the periodic grid.
inline swm::ScalarField heat_exact(const swm::ScalarField& th0, const swm::GridSpec& g, double gamma0, double t) {
  swm::Spectral sp(g);
  std::vector<std::complex<double>> F(g.n_points() / 2 + 1);
  sp.forward(th0, F);
  for (int m = 0; m <= g.n_points() / 2; ++m) F[m] *= std::exp(-g.wavenumber(m) * g.wavenumber(m) * t / gamma0);
  swm::ScalarField out(th0.size());
  sp.inverse(F, out);
  return out;
}

/// Backward-Euler-in-frequency stepping of gamma0 th_t = th_xx, n steps of dt.
inline swm::ScalarField heat_semi_implicit(swm::ScalarField th, const swm::GridSpec& g, double gamma0, double dt,
                                           int n) {
  swm::Spectral sp(g);
  std::vector<std::complex<double>> F(g.n_points() / 2 + 1);
  sp.forward(th, F);
  for (int m = 0; m <= g.n_points() / 2; ++m) {
    const double k2 = g.wavenumber(m) * g.wavenumber(m);
    F[m] *= std::pow(1.0 / (1.0 + dt * k2 / gamma0), n);
  }
  sp.inverse(F, th);
  return th;
}

/// Forward Euler for gamma0 th_t = th_xx.
inline swm::ScalarField heat_explicit(swm::ScalarField th, const swm::GridSpec& g, double gamma0, double dt, int n) {
  swm::Spectral sp(g);
  swm::ScalarField d2(th.size());
  for (int s = 0; s < n; ++s) {
    sp.derivative(th, d2, 2);
    for (std::size_t j = 0; j < th.size(); ++j) th[j] += dt / gamma0 * d2[j];
  }
  return th;
}

/// Classical RK4 for eps th_tt = th_xx - gamma th_t.
inline swm::ScalarField damped_wave_rk4(swm::ScalarField th, swm::ScalarField ph, const swm::GridSpec& g, double eps,
                                        double gamma, double dt, int n) {
  swm::Spectral sp(g);
  const std::size_t N = th.size();
  swm::ScalarField d2(N);
  auto rhs = [&](const swm::ScalarField& a, const swm::ScalarField& b, swm::ScalarField& da, swm::ScalarField& db) {
    sp.derivative(a, d2, 2);
    for (std::size_t j = 0; j < N; ++j) {
      da[j] = b[j];
      db[j] = (d2[j] - gamma * b[j]) / eps;
    }
  };
  std::vector<swm::ScalarField> ka(4, swm::ScalarField(N)), kb(4, swm::ScalarField(N));
  swm::ScalarField ta(N), tb(N);
  for (int s = 0; s < n; ++s) {
    rhs(th, ph, ka[0], kb[0]);
    for (int st = 1; st < 4; ++st) {
      const double c = st == 3 ? 1.0 : 0.5;
      for (std::size_t j = 0; j < N; ++j) {
        ta[j] = th[j] + c * dt * ka[st - 1][j];
        tb[j] = ph[j] + c * dt * kb[st - 1][j];
      }
      rhs(ta, tb, ka[st], kb[st]);
    }
    for (std::size_t j = 0; j < N; ++j) {
      th[j] += dt / 6 * (ka[0][j] + 2 * ka[1][j] + 2 * ka[2][j] + ka[3][j]);
      ph[j] += dt / 6 * (kb[0][j] + 2 * kb[1][j] + 2 * kb[2][j] + kb[3][j]);
    }
  }
  return th;
}

inline double relative_l2(const swm::ScalarField& a, const swm::ScalarField& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    num += (a[j] - b[j]) * (a[j] - b[j]);
    den += b[j] * b[j];
  }
  return std::sqrt(num / den);
}

}  // namespace swm::reference
