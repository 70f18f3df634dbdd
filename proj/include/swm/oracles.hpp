#pragma once

#include <string>
#include <utility>
#include <vector>

namespace swm {

/// Outcome of a named analytic check. `values` holds the measured quantities
/// in the order they were computed.
struct OracleCheck {
  std::string name;
  bool pass = false;
  std::vector<std::pair<std::string, double>> values;
  std::string detail;
};

/// moments, covariance, heat_energy, heat_equivariant, wave_equivariant,
/// constraints, parseval, lambda, prepare_initial, heat_kernel.
const std::vector<std::string>& oracle_names();

/// Throws ConfigError for an unknown name.
OracleCheck run_oracle(const std::string& name);

/// c0 = a_H Gamma(1 - H) and c1 = a_H Gamma(2 - H): the Gaussian-mollified
/// fractional density integrated in closed form.
double closed_form_c0(double hurst, double a_h);
double closed_form_c1(double hurst, double a_h);

}  // namespace swm
