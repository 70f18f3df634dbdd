#include "swm/quadrature.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include <cmath>
#include <memory>
#include <sstream>

#include "swm/errors.hpp"

namespace swm::quad {
namespace {

constexpr std::size_t kWorkspaceSize = 2000;

struct WorkspaceDeleter {
  void operator()(gsl_integration_workspace* w) const { gsl_integration_workspace_free(w); }
};

double trampoline(double x, void* params) {
  return (*static_cast<const std::function<double(double)>*>(params))(x);
}

void disable_gsl_abort() {
  static const bool once = [] {
    gsl_set_error_handler_off();
    return true;
  }();
  (void)once;
}

[[noreturn]] void fail(int status, const char* what, double a, double b, double result, double abserr) {
  std::ostringstream os;
  os << "quadrature failed on " << what << " [" << a << ", " << b << "]: " << gsl_strerror(status)
     << " (estimate " << result << ", abs error " << abserr << ")";
  throw NumericalError(os.str());
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b, double rel_tol) {
  disable_gsl_abort();
  if (a == b) return 0.0;
  std::unique_ptr<gsl_integration_workspace, WorkspaceDeleter> ws(
      gsl_integration_workspace_alloc(kWorkspaceSize));
  gsl_function F{&trampoline, const_cast<std::function<double(double)>*>(&f)};
  double result = 0.0;
  double abserr = 0.0;
  const int status = gsl_integration_qags(&F, a, b, 0.0, rel_tol, kWorkspaceSize, ws.get(), &result, &abserr);
  // A vanishing integrand can report roundoff trouble with a zero estimate.
  if (status != GSL_SUCCESS && !(std::abs(result) < 1e-300 && abserr < 1e-300))
    fail(status, "interval", a, b, result, abserr);
  return result;
}

double integrate_to_infinity(const std::function<double(double)>& f, double a, double rel_tol) {
  disable_gsl_abort();
  std::unique_ptr<gsl_integration_workspace, WorkspaceDeleter> ws(
      gsl_integration_workspace_alloc(kWorkspaceSize));
  gsl_function F{&trampoline, const_cast<std::function<double(double)>*>(&f)};
  double result = 0.0;
  double abserr = 0.0;
  const int status = gsl_integration_qagiu(&F, a, 0.0, rel_tol, kWorkspaceSize, ws.get(), &result, &abserr);
  if (status != GSL_SUCCESS && !(std::abs(result) < 1e-300 && abserr < 1e-300))
    fail(status, "half line", a, INFINITY, result, abserr);
  return result;
}

double integrate_half_line(const std::function<double(double)>& f, double a,
                           const std::vector<double>& breakpoints, double rel_tol) {
  double total = 0.0;
  double left = a;
  for (double b : breakpoints) {
    if (b <= left) continue;
    total += integrate(f, left, b, rel_tol);
    left = b;
  }
  return total + integrate_to_infinity(f, left, rel_tol);
}

}  // namespace swm::quad
