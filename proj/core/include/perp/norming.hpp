#ifndef PERP_NORMING_HPP
#define PERP_NORMING_HPP

#include <string>
#include <vector>

#include "perp/mdist.hpp"
#include "perp/recurrence.hpp"

namespace perp {

/// The four positive constants of the tail bounds
///   exp{c0 y ln p(c1/y)} <= P(R > y) <= exp{c2 y ln p(c3/y)},
/// unknown in closed form; all default to 1 and stay configurable.
struct TailConstants {
  double c0 = 1.0;
  double c1 = 1.0;
  double c2 = 1.0;
  double c3 = 1.0;

  void validate() const;  // throws ConfigError unless all positive
};

enum class NormingMethod { solved_lower, solved_upper, empirical, asymptotic };

std::string to_string(NormingMethod m);

/// A norming pair (a, b): maxima are compared through a*(max - b).
/// log_n is carried instead of n so that ln n up to ~1e300 stays
/// representable; n itself may not fit in any integer type.
struct NormingPair {
  double a = 1.0;  // reciprocal scale, > 0
  double b = 0.0;  // location
  double log_n = 0.0;
  NormingMethod method = NormingMethod::empirical;
  double theta_used = 1.0;
  double residual = 0.0;  // solver residual / fit max-abs residual
  TailConstants constants;
};

/// The affine threshold level u_n(x) = b + x/a.
inline double un_of_x(const NormingPair& p, double x) { return p.b + x / p.a; }

enum class Bound { lower, upper };

/// Serializes to JSON with fields {a, b, n, method, theta_used, residual,
/// constants}; n is null when exp(log_n) is not representable, log_n is
/// always included.
std::string to_json(const NormingPair& pair);

/// Solves c*b*ln p(c'/b) = -ln n for b by bracketed bisection with secant
/// refinement, where (c, c') is (c0, c1) for the lower bound and (c2, c3)
/// for the upper. The left side is strictly increasing in b on (c', inf),
/// so the root is unique. Guarantees |c*b*ln p(c'/b) + ln n| < 1e-9 * ln n.
double solve_bn(const MDist& spec, const TailConstants& constants,
                double log_n, Bound which);

/// The matching scale constant
///   a = c * ( c' * f(1 - c'/b) / (b * p(c'/b)) - ln p(c'/b) ),
/// evaluated in log scale so families whose density and tail mass both
/// underflow still produce a finite ratio. Requires b > c'.
/// Throws CapabilityError for families without a density.
double compute_an(const MDist& spec, const TailConstants& constants, double b,
                  Bound which = Bound::lower);

/// solve_bn + compute_an bundled with the achieved residual.
NormingPair solved_norming(const MDist& spec, const TailConstants& constants,
                           double log_n, Bound which);

/// Leading-order norming. Beta(alpha, beta): a = c0*beta*lnln n,
/// b = ln n / a. RFamily(r): b = (ln n * (r c1)^{1/(r-1)} / c0)^{(r-1)/r},
/// a = c0 * r/(r-1) * (b/(r c1))^{1/(r-1)}. ExpInt: a = ln n/(c0 c1),
/// b = c1 * lnln n. Requires n >= 16 and a supported family.
NormingPair asymptotic_norming(const MDist& spec,
                               const TailConstants& constants, double log_n);

/// The default abscissa grid for empirical fits; covers the Gumbel body.
std::vector<double> default_x_grid();

/// Fits (a, b) by least squares through the empirical quantiles of the
/// stationary sample at levels 1 - e^{-x}/n_eff, n_eff = theta * n, for x
/// in x_grid. The sample must be sorted ascending and hold at least
/// 100 * n_eff values; x_grid needs >= 4 points spanning [-1, 2].
NormingPair empirical_norming(const std::vector<double>& sorted_sample,
                              double n, double theta,
                              const std::vector<double>& x_grid);

/// Same fit fed from a streaming tail reservoir instead of a full sorted
/// sample; the reservoir must retain enough of the tail to answer every
/// grid quantile.
NormingPair empirical_norming(const TailReservoir& reservoir, double n,
                              double theta, const std::vector<double>& x_grid);

/// Same fit fed from reservoirs pooled across replicas.
NormingPair empirical_norming(const PooledTail& pooled, double n, double theta,
                              const std::vector<double>& x_grid);

}  // namespace perp

#endif  // PERP_NORMING_HPP
