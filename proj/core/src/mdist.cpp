#include "perp/mdist.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <vector>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/expint.hpp>

#include "perp/error.hpp"
#include "perp/io.hpp"
#include "perp/quadrature.hpp"

namespace perp {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Quadrature tolerance for normalizing constants, CDFs and moments.
constexpr double kQuadTol = 1e-10;

// Beyond this point the ExpInt inner integral exceeds the largest
// representable double's log range and the density is an exact zero.
constexpr double kExpArgLimit = 700.0;

[[noreturn]] void quad_failure(const char* what, double achieved) {
  std::ostringstream os;
  os << "quadrature did not converge for " << what
     << " (achieved tolerance " << achieved << ")";
  throw NumericError(os.str());
}

double checked_integral(const std::function<double(double)>& f, double a,
                        double b, const char* what) {
  const auto res = integrate(f, a, b, kQuadTol);
  if (!res.converged) {
    quad_failure(what, res.abs_error / std::max(std::abs(res.value), 1e-300));
  }
  return res.value;
}

// Monotone cubic interpolant of the inverse CDF on knots equi-spaced in
// CDF value. Slopes are 1/density limited by the Fritsch-Carlson bound so
// the interpolant cannot leave the knot interval.
struct InverseCdfTable {
  std::vector<double> x;
  std::vector<double> slope;
  double du = 0.0;

  double eval(double u) const {
    if (u <= 0.0) return x.front();
    if (u >= 1.0) return x.back();
    const std::size_t n = x.size();
    std::size_t i = static_cast<std::size_t>(u / du);
    if (i > n - 2) i = n - 2;
    const double s = u / du - static_cast<double>(i);
    const double s2 = s * s;
    const double s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1;
    const double h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2;
    const double h11 = s3 - s2;
    return h00 * x[i] + du * h10 * slope[i] + h01 * x[i + 1] +
           du * h11 * slope[i + 1];
  }
};

constexpr int kTableKnots = 4096;
constexpr double kTableXTol = 1e-12;

// Builds the inverse-CDF table for a continuous law on [0, 1] given its
// normalized density. Marches the knots left to right; each knot is a
// safeguarded bisection/secant solve on the local mass increment, so no
// quadrature ever spans more than one knot interval twice.
InverseCdfTable build_inverse_table(const std::function<double(double)>& pdf,
                                    const char* what) {
  const int n = kTableKnots;
  InverseCdfTable t;
  t.du = 1.0 / (n - 1);
  t.x.assign(n, 0.0);
  t.x[n - 1] = 1.0;

  double x_prev = 0.0;
  for (int i = 1; i < n - 1; ++i) {
    const double target = t.du;  // mass wanted in (x_prev, x_i]
    const auto inc = [&](double xx) {
      return integrate(pdf, x_prev, xx, 1e-9, t.du * 1e-9).value;
    };
    // Expand an upper bracket from a density-based first guess; the
    // increment function only ever integrates across the bracket, so
    // each evaluation stays local and cheap.
    double lo = x_prev;
    double g_lo = -target;
    const double d0 = pdf(x_prev);
    double step = d0 > 0.0 ? target / d0 : t.du;
    double hi = std::min(1.0, x_prev + step);
    double g_hi = inc(hi) - target;
    while (g_hi < 0.0 && hi < 1.0) {
      lo = hi;
      g_lo = g_hi;
      step *= 2.0;
      hi = std::min(1.0, x_prev + step);
      g_hi = inc(hi) - target;
    }
    // Safeguarded refinement: secant steps with a bisection fallback
    // every other iteration so the bracket provably shrinks.
    for (int iter = 0; iter < 140 && hi - lo > kTableXTol; ++iter) {
      double xx;
      const double denom = g_hi - g_lo;
      if (iter % 2 == 0 && denom > 0.0) {
        xx = lo - g_lo * (hi - lo) / denom;
      } else {
        xx = 0.5 * (lo + hi);
      }
      if (!(xx > lo && xx < hi)) xx = 0.5 * (lo + hi);
      const double g = inc(xx) - target;
      if (g >= 0.0) {
        hi = xx;
        g_hi = g;
      } else {
        lo = xx;
        g_lo = g;
      }
    }
    if (hi - lo > 1e-6) {
      std::ostringstream os;
      os << "inverse-CDF knot " << i << " for " << what
         << " did not converge (bracket width " << hi - lo << ")";
      throw NumericError(os.str());
    }
    t.x[i] = 0.5 * (lo + hi);
    x_prev = t.x[i];
  }

  // The mass left between the last interior knot and 1 must be one more
  // knot spacing; anything else means the normalizing constant drifted.
  const double tail_mass = integrate(pdf, x_prev, 1.0, 1e-9, t.du * 1e-9).value;
  if (std::abs(tail_mass - t.du) > t.du * 1e-4) {
    std::ostringstream os;
    os << "inverse-CDF table for " << what
       << " is inconsistent with the normalizing constant (tail mass "
       << tail_mass << ", expected " << t.du << ")";
    throw NumericError(os.str());
  }

  // Fritsch-Carlson limited slopes keep the interpolant monotone even
  // where the density vanishes (infinite ideal slope at the endpoints).
  t.slope.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    const double d = pdf(t.x[i]);
    double m = d > 0.0 ? 1.0 / d : kInf;
    const double sec_l = i > 0 ? (t.x[i] - t.x[i - 1]) / t.du : kInf;
    const double sec_r = i < n - 1 ? (t.x[i + 1] - t.x[i]) / t.du : kInf;
    const double cap = 3.0 * std::min(sec_l, sec_r);
    if (!(m < cap)) m = cap;
    t.slope[i] = m;
  }
  return t;
}

std::string family_name(Family f) {
  switch (f) {
    case Family::beta: return "beta";
    case Family::rfamily: return "rfamily";
    case Family::expint: return "expint";
    case Family::twopoint: return "twopoint";
    case Family::atom_mixture: return "atom_mixture";
  }
  return "?";
}

}  // namespace

struct MDist::Impl {
  Family family{};
  double alpha = 0.0;
  double beta = 0.0;
  double r = 0.0;
  double p = 0.0;
  double p0 = 0.0;
  std::shared_ptr<const Impl> base;

  double K = 1.0;
  double em = 0.0;
  double em2 = 0.0;

  mutable std::once_flag table_once;
  mutable InverseCdfTable table;

  // ---- density families: unnormalized log density ----

  // rfamily: -(1 - t^r)^(-1/(r-1)); the 1 - t^r is computed via expm1 so
  // precision survives t -> 1 where the whole tail behavior lives.
  double rfam_exponent(double t) const {
    if (t >= 1.0) return -kInf;
    const double one_minus_tr = t > 0.0 ? -std::expm1(r * std::log(t)) : 1.0;
    return -std::pow(one_minus_tr, -1.0 / (r - 1.0));
  }

  // expint: inner integral of e^{1/s}/s over [1-t, 1]. Substituting
  // w = 1/s turns it into the exponential integral,
  //   int_{1-t}^1 e^{1/s}/s ds = Ei(1/(1-t)) - Ei(1),
  // which stays accurate across the ~300 orders of magnitude the raw
  // integrand spans. Above 1/(1-t) ~ 700 the density is an exact zero.
  double expint_exponent(double t) const {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0 || 1.0 / (1.0 - t) > kExpArgLimit) return -kInf;
    static const double ei_one = boost::math::expint(1.0);
    return ei_one - boost::math::expint(1.0 / (1.0 - t));
  }

  double unnorm_log_density(double t) const {
    return family == Family::rfamily ? rfam_exponent(t) : expint_exponent(t);
  }

  double norm_density(double t) const {
    if (t <= 0.0 || t >= 1.0) {
      // Endpoint values only matter for table slopes; both families have
      // finite density at 0 and zero density at 1.
      if (t == 0.0) return K * std::exp(unnorm_log_density(0.0));
      return 0.0;
    }
    return K * std::exp(unnorm_log_density(t));
  }

  const InverseCdfTable& inverse_table() const {
    std::call_once(table_once, [this] {
      table = build_inverse_table([this](double t) { return norm_density(t); },
                                  family_name(family).c_str());
    });
    return table;
  }

  // ---- dispatchers ----

  double cdf(double x) const {
    if (x < 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    switch (family) {
      case Family::beta:
        if (alpha == 1.0 && beta == 1.0) return x;
        if (beta == 1.0) return std::pow(x, alpha);
        if (alpha == 1.0) return -std::expm1(beta * std::log1p(-x));
        return boost::math::ibeta(alpha, beta, x);
      case Family::rfamily:
      case Family::expint:
        if (x == 0.0) return 0.0;
        return std::min(
            1.0, K * checked_integral(
                         [this](double t) {
                           return std::exp(unnorm_log_density(t));
                         },
                         0.0, x, "cdf"));
      case Family::twopoint:
        return 1.0 - p;
      case Family::atom_mixture:
        return (1.0 - p0) * base_ref().cdf(x);
    }
    return 0.0;
  }

  double quantile(double u) const {
    if (u < 0.0 || u > 1.0) throw ConfigError("quantile level outside [0,1]");
    switch (family) {
      case Family::beta:
        if (alpha == 1.0 && beta == 1.0) return u;
        if (beta == 1.0) return std::pow(u, 1.0 / alpha);
        if (alpha == 1.0) return -std::expm1(std::log1p(-u) / beta);
        if (u == 0.0) return 0.0;
        if (u == 1.0) return 1.0;
        return boost::math::ibeta_inv(alpha, beta, u);
      case Family::rfamily:
      case Family::expint:
        return inverse_table().eval(u);
      case Family::twopoint:
        return u <= 1.0 - p ? 0.0 : 1.0;
      case Family::atom_mixture:
        if (u > 1.0 - p0) return 1.0;
        return base_ref().quantile(u / (1.0 - p0));
    }
    return 0.0;
  }

  double log_density(double x) const {
    switch (family) {
      case Family::beta: {
        if (x <= 0.0 || x >= 1.0) {
          // boundary conventions chosen so Beta(1,1) has density 1 on [0,1]
          if (x == 0.0 && alpha == 1.0)
            return (beta - 1.0) * 0.0 - std::log(boost::math::beta(alpha, beta));
          if (x == 1.0 && beta == 1.0)
            return -std::log(boost::math::beta(alpha, beta));
          return -kInf;
        }
        return (alpha - 1.0) * std::log(x) + (beta - 1.0) * std::log1p(-x) -
               std::log(boost::math::beta(alpha, beta));
      }
      case Family::rfamily:
      case Family::expint:
        return std::log(K) + unnorm_log_density(x);
      case Family::twopoint:
        throw CapabilityError("twopoint has no density");
      case Family::atom_mixture:
        // density of the absolutely continuous part (off the atom at 1)
        return std::log1p(-p0) + base_ref().log_density(x);
    }
    return -kInf;
  }

  double density(double x) const { return std::exp(log_density(x)); }

  double p_delta(double delta) const {
    check_delta(delta);
    switch (family) {
      case Family::beta:
        if (beta == 1.0) return -std::expm1(alpha * std::log1p(-delta));
        if (alpha == 1.0) return std::pow(delta, beta);
        return boost::math::ibeta(beta, alpha, delta);
      case Family::rfamily:
      case Family::expint:
        return std::exp(log_p_delta(delta));
      case Family::twopoint:
        return p;
      case Family::atom_mixture:
        return p0 + (1.0 - p0) * base_ref().p_delta(delta);
    }
    return 0.0;
  }

  double log_p_delta(double delta) const {
    check_delta(delta);
    switch (family) {
      case Family::beta: {
        if (beta == 1.0)
          return std::log(-std::expm1(alpha * std::log1p(-delta)));
        if (alpha == 1.0) return beta * std::log(delta);
        const double v = boost::math::ibeta(beta, alpha, delta);
        if (v > 0.0) return std::log(v);
        // below double range: leading-order tail of the incomplete beta
        return beta * std::log(delta) -
               std::log(beta * boost::math::beta(alpha, beta));
      }
      case Family::rfamily:
      case Family::expint: {
        // The log-density decreases monotonically on (0, 1) with an
        // unbounded slope near 1, which stalls the adaptive error
        // estimate even though that region carries no mass. Clamp the
        // upper limit where the exponent has fallen 60 nats below its
        // left-endpoint value: the neglected stretch contributes under
        // e^-60 of the peak panel, far inside tolerance, and the kept
        // integrand spans few enough e-folds to resolve cleanly.
        const double lo = 1.0 - delta;
        const double l0 = unnorm_log_density(lo);
        double hi = 1.0;
        if (l0 > -kInf) {
          double a = lo, b = 1.0;
          for (int i = 0; i < 80 && b - a > 1e-14 * delta; ++i) {
            const double mid = 0.5 * (a + b);
            if (mid <= a || mid >= b) break;
            if (unnorm_log_density(mid) > l0 - 60.0) {
              a = mid;
            } else {
              b = mid;
            }
          }
          hi = b;
        }
        const auto res = integrate_log(
            [this](double t) { return unnorm_log_density(t); }, lo, hi,
            kQuadTol);
        if (!res.converged) quad_failure("log p_delta", res.abs_error);
        return std::log(K) + res.log_value;
      }
      case Family::twopoint:
        return std::log(p);
      case Family::atom_mixture:
        return std::log(p0 + (1.0 - p0) * base_ref().p_delta(delta));
    }
    return -kInf;
  }

  double log_p_delta_asymptotic(double delta) const {
    check_delta(delta);
    switch (family) {
      case Family::beta:
        return beta * std::log(delta) -
               std::log(beta * boost::math::beta(alpha, beta));
      case Family::rfamily: {
        const double rd = r * delta;
        return r / (r - 1.0) * std::log(rd) - std::pow(rd, -1.0 / (r - 1.0));
      }
      case Family::expint: {
        if (1.0 / delta > kExpArgLimit) return -kInf;
        return -delta * std::exp(1.0 / delta);
      }
      default:
        throw CapabilityError("p_delta_asymptotic: no closed small-delta "
                              "form for family " + family_name(family));
    }
  }

  double sample(Philox4x64& rng) const {
    switch (family) {
      case Family::beta: {
        const double u = rng.next_double();
        if (alpha == 1.0 && beta == 1.0) return u;
        if (beta == 1.0) return std::pow(u, 1.0 / alpha);
        if (alpha == 1.0) return -std::expm1(std::log1p(-u) / beta);
        return boost::math::ibeta_inv(alpha, beta, u);
      }
      case Family::rfamily:
      case Family::expint:
        return inverse_table().eval(rng.next_double());
      case Family::twopoint:
        return rng.next_double() < p ? 1.0 : 0.0;
      case Family::atom_mixture:
        if (rng.next_double() < p0) return 1.0;
        return base_ref().sample(rng);
    }
    return 0.0;
  }

  const Impl& base_ref() const { return *base; }

  static void check_delta(double delta) {
    if (!(delta > 0.0 && delta < 1.0)) {
      throw ConfigError("delta must lie in (0,1)");
    }
  }
};

MDist::MDist(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

MDist MDist::beta(double alpha, double beta) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw ConfigError("beta: alpha must be a positive real, got " +
                      format_double(alpha));
  }
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw ConfigError("beta: beta must be a positive real, got " +
                      format_double(beta));
  }
  auto impl = std::make_shared<Impl>();
  impl->family = Family::beta;
  impl->alpha = alpha;
  impl->beta = beta;
  impl->K = 1.0;
  impl->em = alpha / (alpha + beta);
  impl->em2 = alpha * (alpha + 1.0) / ((alpha + beta) * (alpha + beta + 1.0));
  return MDist(std::move(impl));
}

MDist MDist::rfamily(double r) {
  if (!(r > 1.0) || !std::isfinite(r)) {
    throw ConfigError("rfamily: r must exceed 1, got " + format_double(r));
  }
  auto impl = std::make_shared<Impl>();
  impl->family = Family::rfamily;
  impl->r = r;
  const auto f = [&](double t) { return std::exp(impl->rfam_exponent(t)); };
  impl->K = 1.0 / checked_integral(f, 0.0, 1.0, "rfamily normalization");
  impl->em =
      impl->K * checked_integral([&](double t) { return t * f(t); }, 0.0, 1.0,
                                 "rfamily mean");
  impl->em2 =
      impl->K * checked_integral([&](double t) { return t * t * f(t); }, 0.0,
                                 1.0, "rfamily second moment");
  return MDist(std::move(impl));
}

MDist MDist::expint() {
  auto impl = std::make_shared<Impl>();
  impl->family = Family::expint;
  const auto f = [&](double t) { return std::exp(impl->expint_exponent(t)); };
  impl->K = 1.0 / checked_integral(f, 0.0, 1.0, "expint normalization");
  impl->em =
      impl->K * checked_integral([&](double t) { return t * f(t); }, 0.0, 1.0,
                                 "expint mean");
  impl->em2 =
      impl->K * checked_integral([&](double t) { return t * t * f(t); }, 0.0,
                                 1.0, "expint second moment");
  return MDist(std::move(impl));
}

MDist MDist::twopoint(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw ConfigError("twopoint: p must lie in (0,1), got " +
                      format_double(p));
  }
  auto impl = std::make_shared<Impl>();
  impl->family = Family::twopoint;
  impl->p = p;
  impl->em = p;
  impl->em2 = p;
  return MDist(std::move(impl));
}

MDist MDist::atom_mixture(double p0, const MDist& base) {
  if (!(p0 > 0.0 && p0 < 1.0)) {
    throw ConfigError("atom_mixture: p0 must lie in (0,1), got " +
                      format_double(p0));
  }
  if (base.atom_at_one() != 0.0) {
    throw ConfigError("atom_mixture: base must have no atom at 1 (family " +
                      family_name(base.family()) + " has one)");
  }
  if (base.atom_at_zero() != 0.0) {
    throw ConfigError("atom_mixture: base must have no atom at 0");
  }
  auto impl = std::make_shared<Impl>();
  impl->family = Family::atom_mixture;
  impl->p0 = p0;
  impl->base = base.impl_;
  impl->K = base.impl_->K;
  impl->em = p0 + (1.0 - p0) * base.mean();
  impl->em2 = p0 + (1.0 - p0) * base.second_moment();
  return MDist(std::move(impl));
}

Family MDist::family() const { return impl_->family; }

ValidationReport MDist::validate() const {
  ValidationReport rep;
  rep.non_degenerate = true;  // enforced by construction for every family
  switch (impl_->family) {
    case Family::beta:
    case Family::rfamily:
    case Family::expint:
      rep.right_endpoint_one = true;
      rep.no_atom_at_zero = true;
      break;
    case Family::twopoint:
      rep.right_endpoint_one = true;
      rep.no_atom_at_zero = false;
      rep.counterexample = true;
      rep.detail = "twopoint places mass " +
                   format_double(1.0 - impl_->p) +
                   " at zero; the Gumbel limit does not apply";
      break;
    case Family::atom_mixture:
      rep.right_endpoint_one = true;
      rep.no_atom_at_zero = true;
      break;
  }
  return rep;
}

double MDist::cdf(double x) const { return impl_->cdf(x); }
double MDist::quantile(double u) const { return impl_->quantile(u); }
double MDist::density(double x) const { return impl_->density(x); }
double MDist::log_density(double x) const { return impl_->log_density(x); }
double MDist::p_delta(double delta) const { return impl_->p_delta(delta); }
double MDist::log_p_delta(double delta) const {
  return impl_->log_p_delta(delta);
}

double MDist::p_delta_asymptotic(double delta) const {
  return std::exp(impl_->log_p_delta_asymptotic(delta));
}

double MDist::log_p_delta_asymptotic(double delta) const {
  return impl_->log_p_delta_asymptotic(delta);
}

double MDist::atom_at_one() const {
  switch (impl_->family) {
    case Family::twopoint: return impl_->p;
    case Family::atom_mixture: return impl_->p0;
    default: return 0.0;
  }
}

double MDist::atom_at_zero() const {
  return impl_->family == Family::twopoint ? 1.0 - impl_->p : 0.0;
}

double MDist::mean() const { return impl_->em; }
double MDist::second_moment() const { return impl_->em2; }
double MDist::normalizing_constant() const { return impl_->K; }
double MDist::sample(Philox4x64& rng) const { return impl_->sample(rng); }

bool MDist::is_counterexample() const {
  return impl_->family == Family::twopoint;
}

MDist MDist::base() const {
  if (impl_->family != Family::atom_mixture) {
    throw ConfigError("base(): only atom_mixture has a base law");
  }
  return MDist(impl_->base);
}

double MDist::param_alpha() const { return impl_->alpha; }
double MDist::param_beta() const { return impl_->beta; }
double MDist::param_r() const { return impl_->r; }
double MDist::param_p() const { return impl_->p; }
double MDist::param_p0() const { return impl_->p0; }

namespace {

void serialize_into(const MDist& d, const std::string& prefix,
                    std::string& out) {
  out += prefix + "family=" + family_name(d.family());
  switch (d.family()) {
    case Family::beta:
      out += " " + prefix + "alpha=" + format_double(d.param_alpha());
      out += " " + prefix + "beta=" + format_double(d.param_beta());
      break;
    case Family::rfamily:
      out += " " + prefix + "r=" + format_double(d.param_r());
      break;
    case Family::expint:
      break;
    case Family::twopoint:
      out += " " + prefix + "p=" + format_double(d.param_p());
      break;
    case Family::atom_mixture:
      out += " " + prefix + "p0=" + format_double(d.param_p0());
      out += " ";
      serialize_into(d.base(), prefix + "base.", out);
      break;
  }
}

using KvMap = std::map<std::string, std::string>;

double take_double(KvMap& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) {
    throw ConfigError("distribution spec: missing key '" + key + "'");
  }
  const double v = parse_double(it->second, "distribution key '" + key + "'");
  kv.erase(it);
  return v;
}

MDist parse_from_map(KvMap kv, const std::string& prefix) {
  auto fam_it = kv.find("family");
  if (fam_it == kv.end()) {
    throw ConfigError("distribution spec: missing key '" + prefix +
                      "family'");
  }
  const std::string fam = fam_it->second;
  kv.erase(fam_it);

  MDist result = MDist::beta(1, 1);
  if (fam == "beta") {
    const double a = take_double(kv, "alpha");
    const double b = take_double(kv, "beta");
    result = MDist::beta(a, b);
  } else if (fam == "rfamily") {
    result = MDist::rfamily(take_double(kv, "r"));
  } else if (fam == "expint") {
    result = MDist::expint();
  } else if (fam == "twopoint") {
    result = MDist::twopoint(take_double(kv, "p"));
  } else if (fam == "atom_mixture") {
    const double p0 = take_double(kv, "p0");
    KvMap base_kv;
    for (auto it = kv.begin(); it != kv.end();) {
      if (it->first.rfind("base.", 0) == 0) {
        base_kv[it->first.substr(5)] = it->second;
        it = kv.erase(it);
      } else {
        ++it;
      }
    }
    result = MDist::atom_mixture(p0, parse_from_map(std::move(base_kv),
                                                    prefix + "base."));
  } else {
    throw ConfigError("distribution spec: unknown family '" + fam + "'");
  }
  if (!kv.empty()) {
    throw ConfigError("distribution spec: unknown key '" + prefix +
                      kv.begin()->first + "'");
  }
  return result;
}

}  // namespace

std::string MDist::to_text() const {
  std::string out;
  serialize_into(*this, "", out);
  return out;
}

MDist MDist::from_text(const std::string& text) {
  KvMap kv;
  std::istringstream is(text);
  std::string tok;
  while (is >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 >= tok.size()) {
      throw ConfigError("distribution spec: expected key=value, got '" + tok +
                        "'");
    }
    const std::string key = tok.substr(0, eq);
    if (!kv.emplace(key, tok.substr(eq + 1)).second) {
      throw ConfigError("distribution spec: duplicate key '" + key + "'");
    }
  }
  if (kv.empty()) throw ConfigError("distribution spec: empty");
  return parse_from_map(std::move(kv), "");
}

}  // namespace perp
