#ifndef PERP_MDIST_HPP
#define PERP_MDIST_HPP

#include <memory>
#include <string>

#include "perp/rng.hpp"

namespace perp {

enum class Family {
  beta,          // Beta(alpha, beta) on [0, 1]
  rfamily,       // density K * exp(-(1 - t^r)^(-1/(r-1))), r > 1
  expint,        // density K * exp(-int_{1-t}^1 e^{1/s}/s ds)
  twopoint,      // P(M=1) = p, P(M=0) = 1-p; the non-convergent case
  atom_mixture,  // atom p0 at 1, rest from a continuous base family
};

/// Which structural assumptions the multiplier law satisfies. All three are
/// required for the Gumbel-limit machinery; a spec failing any of them can
/// still be simulated when the caller opts in explicitly.
struct ValidationReport {
  bool non_degenerate = false;     // M is not a.s. constant
  bool right_endpoint_one = false; // sup{x : P(M > x) > 0} == 1
  bool no_atom_at_zero = false;    // P(M = 0) == 0
  bool counterexample = false;     // flagged family kept for negative controls
  std::string detail;

  bool eligible() const {
    return non_degenerate && right_endpoint_one && no_atom_at_zero;
  }
};

/// Law of the multiplier M with support in [0, 1].
///
/// Immutable after construction; normalizing constant and moments are
/// computed eagerly, inverse-CDF sampling tables lazily and exactly once.
/// Sampling takes a caller-owned generator, so concurrent sampling with
/// distinct generators is safe.
class MDist {
 public:
  static MDist beta(double alpha, double beta);
  static MDist rfamily(double r);
  static MDist expint();
  static MDist twopoint(double p);
  static MDist atom_mixture(double p0, const MDist& base);

  /// Parses the text form, e.g. "family=beta alpha=2 beta=1".
  static MDist from_text(const std::string& text);
  std::string to_text() const;

  Family family() const;
  ValidationReport validate() const;

  /// Right-continuous CDF; x outside [0, 1] clamps to 0 / 1.
  double cdf(double x) const;

  /// Generalized inverse of the CDF at u in [0, 1].
  double quantile(double u) const;

  /// Density at x in (0, 1). CapabilityError for families without one;
  /// AtomMixture delegates to its base (the density off the atom).
  double density(double x) const;
  double log_density(double x) const;

  /// P(1 - delta < M <= 1) for delta in (0, 1).
  double p_delta(double delta) const;
  double log_p_delta(double delta) const;

  /// Leading-order small-delta form of p_delta (Beta / RFamily / ExpInt
  /// only). For ExpInt the value itself underflows below delta ~ 0.03;
  /// use the log form there.
  double p_delta_asymptotic(double delta) const;
  double log_p_delta_asymptotic(double delta) const;

  /// P(M = 1).
  double atom_at_one() const;
  /// P(M = 0).
  double atom_at_zero() const;

  double mean() const;           // E M, in (0, 1)
  double second_moment() const;  // E M^2
  /// Normalizing constant K for the density families (1 for Beta).
  double normalizing_constant() const;

  /// One draw. Beta by closed-form or incomplete-beta inverse, RFamily and
  /// ExpInt through the lazily built monotone inverse-CDF table, TwoPoint
  /// and AtomMixture by a uniform coin then delegation.
  double sample(Philox4x64& rng) const;

  bool is_counterexample() const;
  /// Base law for AtomMixture; ConfigError otherwise.
  MDist base() const;

  // Family parameters; meaningful fields depend on family().
  double param_alpha() const;
  double param_beta() const;
  double param_r() const;
  double param_p() const;
  double param_p0() const;

 private:
  struct Impl;
  explicit MDist(std::shared_ptr<const Impl> impl);
  std::shared_ptr<const Impl> impl_;
};

}  // namespace perp

#endif  // PERP_MDIST_HPP
