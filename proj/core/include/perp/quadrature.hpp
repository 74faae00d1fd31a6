#ifndef PERP_QUADRATURE_HPP
#define PERP_QUADRATURE_HPP

#include <cmath>
#include <cstdint>
#include <functional>

namespace perp {

/// Outcome of an adaptive integration.
struct QuadResult {
  double value = 0.0;
  double abs_error = 0.0;   // estimated
  std::int64_t evaluations = 0;
  bool converged = false;
};

/// Outcome of a log-scale integration: log_value = ln of the integral of
/// exp(log_f). Usable when the integral itself underflows a double.
struct LogQuadResult {
  double log_value = 0.0;
  double abs_error = 0.0;   // estimated, relative to exp(log_value)
  std::int64_t evaluations = 0;
  bool converged = false;
};

/// Adaptive Gauss-Kronrod 7-15 on [a, b].
///
/// Bisects intervals whose Kronrod-Gauss discrepancy exceeds the local
/// error budget. The budget is set from a first whole-interval estimate
/// and re-tightened once if that estimate was poor. Throws nothing;
/// callers that require convergence should check `converged`.
QuadResult integrate(const std::function<double(double)>& f, double a,
                     double b, double rel_tol = 1e-10, double abs_tol = 0.0,
                     std::int64_t max_evaluations = 2000000);

/// Adaptive integration of exp(log_f) on [a, b] in log scale.
///
/// The integrand's log is scanned on a coarse grid for its maximum S, then
/// exp(log_f - S) is integrated adaptively; the result is S plus the log of
/// that shifted integral. Regions more than ~700 e-folds below the peak
/// contribute exact zeros, which is the correct rounding. Returns
/// log_value = -inf when the integrand is zero everywhere.
LogQuadResult integrate_log(const std::function<double(double)>& log_f,
                            double a, double b, double rel_tol = 1e-10,
                            std::int64_t max_evaluations = 2000000);

}  // namespace perp

#endif  // PERP_QUADRATURE_HPP
