#include "perp/norming.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "perp/error.hpp"
#include "perp/io.hpp"

namespace perp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Smallest admissible ln n: the solver contract is stated for n >= 2.
const double kMinLogN = std::log(2.0) * (1.0 - 1e-12);

struct BoundConstants {
  double c;       // multiplier (c0 or c2)
  double cprime;  // threshold divisor (c1 or c3)
};

BoundConstants pick(const TailConstants& tc, Bound which) {
  return which == Bound::lower ? BoundConstants{tc.c0, tc.c1}
                               : BoundConstants{tc.c2, tc.c3};
}

// Left side of the norming equation: -c * b * ln p(c'/b), strictly
// increasing from 0 to infinity as b runs over (c', inf).
double equation_lhs(const MDist& spec, const BoundConstants& bc, double b) {
  return -bc.c * b * spec.log_p_delta(bc.cprime / b);
}

}  // namespace

void TailConstants::validate() const {
  const double vals[4] = {c0, c1, c2, c3};
  const char* names[4] = {"c0", "c1", "c2", "c3"};
  for (int i = 0; i < 4; ++i) {
    if (!(vals[i] > 0.0) || !std::isfinite(vals[i])) {
      throw ConfigError(std::string("tail constants: ") + names[i] +
                        " must be a positive real, got " +
                        format_double(vals[i]));
    }
  }
}

std::string to_string(NormingMethod m) {
  switch (m) {
    case NormingMethod::solved_lower: return "solved-lower";
    case NormingMethod::solved_upper: return "solved-upper";
    case NormingMethod::empirical: return "empirical";
    case NormingMethod::asymptotic: return "asymptotic";
  }
  return "?";
}

std::string to_json(const NormingPair& pair) {
  nlohmann::ordered_json j;
  j["a"] = pair.a;
  j["b"] = pair.b;
  const double n = std::exp(pair.log_n);
  if (std::isfinite(n)) {
    j["n"] = n;
  } else {
    j["n"] = nullptr;
  }
  j["log_n"] = pair.log_n;
  j["method"] = to_string(pair.method);
  j["theta_used"] = pair.theta_used;
  j["residual"] = pair.residual;
  j["constants"] = {{"c0", pair.constants.c0},
                    {"c1", pair.constants.c1},
                    {"c2", pair.constants.c2},
                    {"c3", pair.constants.c3}};
  return j.dump();
}

double solve_bn(const MDist& spec, const TailConstants& constants,
                double log_n, Bound which) {
  constants.validate();
  if (!(log_n >= kMinLogN) || !std::isfinite(log_n)) {
    throw ConfigError("solve_bn: ln n must be >= ln 2, got " +
                      format_double(log_n));
  }
  const auto bc = pick(constants, which);

  double lo = bc.cprime * (1.0 + 1e-6);
  double g_lo = equation_lhs(spec, bc, lo) - log_n;
  if (g_lo >= 0.0) {
    std::ostringstream os;
    os << "solve_bn: no root with b > " << format_double(bc.cprime)
       << "; left side at b = " << format_double(lo) << " is already "
       << format_double(g_lo + log_n) << " >= ln n = " << format_double(log_n);
    throw RootFindError(os.str());
  }

  // Geometric growth until the increasing left side crosses ln n.
  double hi = std::max(2.0 * lo, log_n);
  double g_hi = equation_lhs(spec, bc, hi) - log_n;
  int growth = 0;
  while (g_hi < 0.0) {
    if (++growth > 200) {
      std::ostringstream os;
      os << "solve_bn: no sign change up to b = " << format_double(hi)
         << " (left side " << format_double(g_hi + log_n) << ", ln n = "
         << format_double(log_n) << ")";
      throw RootFindError(os.str());
    }
    lo = hi;
    g_lo = g_hi;
    hi *= 2.0;
    g_hi = equation_lhs(spec, bc, hi) - log_n;
  }

  // Secant steps with a bisection fallback every other iteration: fast on
  // the smooth families, still guaranteed on kinked ones.
  for (int iter = 0; iter < 200; ++iter) {
    if (hi - lo <= 1e-15 * hi) break;
    double mid;
    const double denom = g_hi - g_lo;
    if (iter % 2 == 0 && denom > 0.0) {
      mid = lo - g_lo * (hi - lo) / denom;
    } else {
      mid = 0.5 * (lo + hi);
    }
    if (!(mid > lo && mid < hi)) mid = 0.5 * (lo + hi);
    const double g = equation_lhs(spec, bc, mid) - log_n;
    if (g >= 0.0) {
      hi = mid;
      g_hi = g;
    } else {
      lo = mid;
      g_lo = g;
    }
  }
  const double b = 0.5 * (lo + hi);

  const double residual = std::abs(equation_lhs(spec, bc, b) - log_n);
  if (!(residual < 1e-9 * log_n)) {
    std::ostringstream os;
    os << "solve_bn: residual " << format_double(residual)
       << " exceeds contract 1e-9 * ln n on bracket ["
       << format_double(lo) << ", " << format_double(hi) << "]";
    throw RootFindError(os.str());
  }
  return b;
}

double compute_an(const MDist& spec, const TailConstants& constants, double b,
                  Bound which) {
  constants.validate();
  const auto bc = pick(constants, which);
  if (!(b > bc.cprime)) {
    throw ConfigError("compute_an: need b > " + format_double(bc.cprime) +
                      ", got b = " + format_double(b));
  }
  const double delta = bc.cprime / b;
  const double log_p = spec.log_p_delta(delta);
  const double log_f = spec.log_density(1.0 - delta);

  double term1 = 0.0;
  if (log_f != -kInf) {
    const double lt1 = std::log(bc.cprime) + log_f - std::log(b) - log_p;
    term1 = std::exp(lt1);
    if (!std::isfinite(term1)) {
      throw NumericError(
          "compute_an: density/tail ratio overflows at delta = " +
          format_double(delta));
    }
  }
  const double a = bc.c * (term1 - log_p);
  if (!(a > 0.0) || !std::isfinite(a)) {
    throw NumericError("compute_an: nonpositive scale at b = " +
                       format_double(b));
  }
  return a;
}

NormingPair solved_norming(const MDist& spec, const TailConstants& constants,
                           double log_n, Bound which) {
  NormingPair out;
  out.constants = constants;
  out.log_n = log_n;
  out.method = which == Bound::lower ? NormingMethod::solved_lower
                                     : NormingMethod::solved_upper;
  out.b = solve_bn(spec, constants, log_n, which);
  out.a = compute_an(spec, constants, out.b, which);
  const auto bc = pick(constants, which);
  out.residual = std::abs(equation_lhs(spec, bc, out.b) - log_n);
  return out;
}

NormingPair asymptotic_norming(const MDist& spec,
                               const TailConstants& constants, double log_n) {
  constants.validate();
  if (!(log_n >= std::log(16.0) * (1.0 - 1e-12))) {
    throw ConfigError("asymptotic_norming: need n >= 16 (ln n >= 2.77), got "
                      "ln n = " + format_double(log_n));
  }
  const double loglog = std::log(log_n);
  NormingPair out;
  out.constants = constants;
  out.log_n = log_n;
  out.method = NormingMethod::asymptotic;
  switch (spec.family()) {
    case Family::beta: {
      out.a = constants.c0 * spec.param_beta() * loglog;
      out.b = log_n / out.a;
      break;
    }
    case Family::rfamily: {
      const double r = spec.param_r();
      const double rc1 = r * constants.c1;
      out.b = std::pow(log_n * std::pow(rc1, 1.0 / (r - 1.0)) / constants.c0,
                       (r - 1.0) / r);
      out.a = constants.c0 * r / (r - 1.0) *
              std::pow(out.b / rc1, 1.0 / (r - 1.0));
      break;
    }
    case Family::expint: {
      out.a = log_n / (constants.c0 * constants.c1);
      out.b = constants.c1 * loglog;
      break;
    }
    default:
      throw CapabilityError(
          "asymptotic_norming: no closed leading order for this family");
  }
  return out;
}

std::vector<double> default_x_grid() {
  return {-1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0};
}

namespace {

void check_grid(const std::vector<double>& x_grid) {
  if (x_grid.size() < 4) {
    throw ConfigError("empirical_norming: x_grid needs >= 4 points, got " +
                      std::to_string(x_grid.size()));
  }
  const auto [mn, mx] = std::minmax_element(x_grid.begin(), x_grid.end());
  if (!(*mn <= -1.0 && *mx >= 2.0)) {
    throw ConfigError("empirical_norming: x_grid must span at least [-1, 2]");
  }
}

double effective_n(double n, double theta) {
  if (!(n >= 1.0) || !std::isfinite(n)) {
    throw ConfigError("empirical_norming: n must be >= 1");
  }
  if (!(theta > 0.0 && theta <= 1.0)) {
    throw ConfigError("empirical_norming: theta must lie in (0, 1]");
  }
  return theta * n;
}

// Least-squares affine fit q(x) = b + x/a over the grid, by the normal
// equations of the two-column design [1, x].
NormingPair fit_affine(const std::vector<double>& xs,
                       const std::vector<double>& qs, double n, double theta) {
  const double m = static_cast<double>(xs.size());
  double sx = 0, sxx = 0, sy = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sxx += xs[i] * xs[i];
    sy += qs[i];
    sxy += xs[i] * qs[i];
  }
  const double det = m * sxx - sx * sx;
  if (!(det > 0.0)) {
    throw EstimationError("empirical_norming: degenerate x_grid (fit "
                          "underdetermined)");
  }
  const double slope = (m * sxy - sx * sy) / det;
  const double intercept = (sy - slope * sx) / m;
  if (!(slope > 0.0)) {
    throw EstimationError(
        "empirical_norming: fitted slope is not positive; the sample "
        "quantiles do not increase across the grid");
  }
  NormingPair out;
  out.a = 1.0 / slope;
  out.b = intercept;
  out.log_n = std::log(n);
  out.method = NormingMethod::empirical;
  out.theta_used = theta;
  double max_resid = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    max_resid = std::max(max_resid,
                         std::abs(qs[i] - (intercept + slope * xs[i])));
  }
  out.residual = max_resid;
  return out;
}

}  // namespace

NormingPair empirical_norming(const std::vector<double>& sorted_sample,
                              double n, double theta,
                              const std::vector<double>& x_grid) {
  check_grid(x_grid);
  const double n_eff = effective_n(n, theta);
  const double size = static_cast<double>(sorted_sample.size());
  if (size < 100.0 * n_eff) {
    throw EstimationError(
        "empirical_norming: need a sample of at least " +
        format_double(std::ceil(100.0 * n_eff)) + " values for n_eff = " +
        format_double(n_eff) + ", got " + std::to_string(sorted_sample.size()));
  }
  std::vector<double> qs;
  qs.reserve(x_grid.size());
  for (const double x : x_grid) {
    const double level = 1.0 - std::exp(-x) / n_eff;
    if (!(level > 0.0)) {
      throw EstimationError("empirical_norming: level for x = " +
                            format_double(x) + " is not positive; n_eff = " +
                            format_double(n_eff) + " is too small");
    }
    const auto rank = static_cast<std::size_t>(
        std::max(1.0, std::ceil(level * size)));
    qs.push_back(sorted_sample[std::min<std::size_t>(rank, sorted_sample.size()) - 1]);
  }
  return fit_affine(x_grid, qs, n, theta);
}

namespace {

template <typename QuantileSource>
NormingPair empirical_from_quantiles(const QuantileSource& source,
                                     std::uint64_t observed, double n,
                                     double theta,
                                     const std::vector<double>& x_grid) {
  check_grid(x_grid);
  const double n_eff = effective_n(n, theta);
  const double size = static_cast<double>(observed);
  if (size < 100.0 * n_eff) {
    throw EstimationError(
        "empirical_norming: need a sample of at least " +
        format_double(std::ceil(100.0 * n_eff)) + " values for n_eff = " +
        format_double(n_eff) + ", got " + std::to_string(observed));
  }
  std::vector<double> qs;
  qs.reserve(x_grid.size());
  for (const double x : x_grid) {
    const double level = 1.0 - std::exp(-x) / n_eff;
    if (!(level > 0.0)) {
      throw EstimationError("empirical_norming: level for x = " +
                            format_double(x) + " is not positive; n_eff = " +
                            format_double(n_eff) + " is too small");
    }
    qs.push_back(source.quantile(level));
  }
  return fit_affine(x_grid, qs, n, theta);
}

}  // namespace

NormingPair empirical_norming(const TailReservoir& reservoir, double n,
                              double theta, const std::vector<double>& x_grid) {
  return empirical_from_quantiles(reservoir, reservoir.n_observed(), n, theta,
                                  x_grid);
}

NormingPair empirical_norming(const PooledTail& pooled, double n, double theta,
                              const std::vector<double>& x_grid) {
  return empirical_from_quantiles(pooled, pooled.n_observed, n, theta, x_grid);
}

}  // namespace perp
