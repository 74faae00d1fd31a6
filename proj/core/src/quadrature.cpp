#include "perp/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace perp {
namespace {

// 15-point Kronrod extension of 7-point Gauss, nodes/weights for [-1, 1].
// Positive-half abscissae; even indices are the embedded Gauss nodes.
constexpr double kNodes[8] = {
    0.9914553711208126, 0.9491079123427585, 0.8648644233597691,
    0.7415311855993944, 0.5860872354676911, 0.4058451513773972,
    0.2077849550078985, 0.0};
constexpr double kKronrodW[8] = {
    0.0229353220105292, 0.0630920926299785, 0.1047900103222502,
    0.1406532597155259, 0.1690047266392679, 0.1903505780647854,
    0.2044329400752989, 0.2094821410847278};
constexpr double kGaussW[4] = {0.1294849661688697, 0.2797053914892767,
                               0.3818300505051189, 0.4179591836734694};

struct PanelEstimate {
  double kronrod;
  double gauss;
  double err;  // |kronrod - gauss|
};

PanelEstimate gk15(const std::function<double(double)>& f, double a,
                   double b) {
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double k = 0.0;
  double g = 0.0;
  for (int i = 0; i < 8; ++i) {
    const double off = half * kNodes[i];
    double v = f(mid + off);
    if (kNodes[i] != 0.0) v += f(mid - off);
    k += kKronrodW[i] * v;
    if (i % 2 == 1) g += kGaussW[i / 2] * v;
  }
  k *= half;
  g *= half;
  return {k, g, std::abs(k - g)};
}

struct Panel {
  double a, b;
  double value;
  double err;
};

}  // namespace

QuadResult integrate(const std::function<double(double)>& f, double a,
                     double b, double rel_tol, double abs_tol,
                     std::int64_t max_evaluations) {
  QuadResult out;
  if (a == b) {
    out.converged = true;
    return out;
  }

  std::vector<Panel> active;
  std::vector<Panel> done;
  const auto first = gk15(f, a, b);
  out.evaluations = 15;
  active.push_back({a, b, first.kronrod, first.err});

  // Two passes: the error budget depends on the integral's magnitude,
  // which is only roughly known up front.
  double budget =
      std::max(abs_tol, rel_tol * std::max(std::abs(first.kronrod), 1e-300));
  for (int pass = 0; pass < 2; ++pass) {
    while (!active.empty() && out.evaluations + 30 <= max_evaluations) {
      Panel p = active.back();
      active.pop_back();
      const double width_budget = budget * (p.b - p.a) / (b - a);
      if (p.err <= std::max(width_budget, 1e-305) ||
          p.b - p.a < 8.0 * std::numeric_limits<double>::epsilon() *
                           (std::abs(p.a) + std::abs(p.b))) {
        done.push_back(p);
        continue;
      }
      const double mid = 0.5 * (p.a + p.b);
      const auto l = gk15(f, p.a, mid);
      const auto r = gk15(f, mid, p.b);
      out.evaluations += 30;
      active.push_back({p.a, mid, l.kronrod, l.err});
      active.push_back({mid, p.b, r.kronrod, r.err});
    }
    double total = 0.0;
    double err = 0.0;
    for (const auto& p : done) {
      total += p.value;
      err += p.err;
    }
    for (const auto& p : active) {
      total += p.value;
      err += p.err;
    }
    out.value = total;
    out.abs_error = err;
    const double target =
        std::max(abs_tol, rel_tol * std::max(std::abs(total), 1e-300));
    out.converged = active.empty() && err <= target;
    if (out.converged || pass == 1 ||
        out.evaluations + 30 > max_evaluations) {
      break;
    }
    // Re-tighten with the improved magnitude estimate and requeue
    // anything still above the per-width budget.
    budget = target;
    active.insert(active.end(), done.begin(), done.end());
    done.clear();
  }
  return out;
}

LogQuadResult integrate_log(const std::function<double(double)>& log_f,
                            double a, double b, double rel_tol,
                            std::int64_t max_evaluations) {
  LogQuadResult out;
  if (a == b) {
    out.log_value = -std::numeric_limits<double>::infinity();
    out.converged = true;
    return out;
  }

  // Locate the peak on a coarse grid; endpoints included because the
  // integrands of interest are monotone on the interval.
  const int scan_points = 129;
  double shift = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < scan_points; ++i) {
    const double t = a + (b - a) * static_cast<double>(i) / (scan_points - 1);
    shift = std::max(shift, log_f(t));
  }
  out.evaluations = scan_points;
  if (!std::isfinite(shift)) {
    // Integrand is zero (or invalid) everywhere on the grid.
    out.log_value = -std::numeric_limits<double>::infinity();
    out.converged = true;
    return out;
  }

  const auto shifted = [&](double t) {
    const double lf = log_f(t);
    return std::isfinite(lf) ? std::exp(lf - shift) : 0.0;
  };
  // The exponent is representable only to |shift| * eps, so the shifted
  // integrand carries that much multiplicative noise; a tighter relative
  // tolerance than the noise floor cannot be met, and the log-scale
  // result is still accurate to ~|shift| * eps nats.
  const double noise_floor = 128.0 *
                             std::numeric_limits<double>::epsilon() *
                             std::abs(shift);
  const auto inner = integrate(shifted, a, b,
                               std::max(rel_tol, noise_floor), 0.0,
                               max_evaluations - out.evaluations);
  out.evaluations += inner.evaluations;
  out.converged = inner.converged;
  if (inner.value <= 0.0) {
    out.log_value = -std::numeric_limits<double>::infinity();
    out.abs_error = inner.abs_error;
    return out;
  }
  out.log_value = shift + std::log(inner.value);
  out.abs_error = inner.abs_error / inner.value;
  return out;
}

}  // namespace perp
