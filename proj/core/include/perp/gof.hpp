#ifndef PERP_GOF_HPP
#define PERP_GOF_HPP

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "perp/mdist.hpp"
#include "perp/norming.hpp"
#include "perp/rng.hpp"

namespace perp {

/// Sorted-sample view with the quantile conventions used everywhere in
/// this library: quantile(level) is the order statistic at 1-based rank
/// ceil(level * size), level_of(x) is the fraction of values <= x.
class EcdfView {
 public:
  /// Takes ownership; sorts if needed.
  explicit EcdfView(std::vector<double> values);

  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }

  double quantile(double level) const;
  double level_of(double x) const;

  /// Tail probability P(X > y) under the ECDF.
  double tail(double y) const;

  /// CSV export: header `value,level`, one row per sample point.
  void to_csv(std::ostream& os) const;

 private:
  std::vector<double> values_;
};

/// The Gumbel distribution function exp(-e^{-x}).
inline double gumbel_cdf(double x) { return std::exp(-std::exp(-x)); }

/// Exact one-sample Kolmogorov-Smirnov distance between the ECDF of
/// {a * (v - b)} and the Gumbel law, evaluated from both sides of every
/// jump point.
double ks_gumbel(const std::vector<double>& sample, const NormingPair& norming);

/// Tail-sandwich feasibility certificate: which constant pairs (c, c')
/// from the grid satisfy the lower bound exp{c y ln p(c'/y)} <= P(R>y)
/// (resp. the upper bound >=) at every grid y simultaneously.
struct SandwichReport {
  std::vector<double> y_grid;        // grid actually used, ascending
  std::vector<double> neg_log_tail;  // -ln P(R > y) per grid point
  std::vector<std::pair<double, double>> lower_feasible;
  std::vector<std::pair<double, double>> upper_feasible;
  bool feasible = false;  // both candidate sets nonempty
  std::size_t dropped_y = 0;  // grid points removed for empty empirical tail
  std::string warning;
};

std::string to_json(const SandwichReport& report);

/// Checks every pair of constant_grid in both the lower and the upper
/// role over y_grid, which must be ascending and lie within the sample's
/// [90th, 99.99th] percentile range. Where c'/y >= 1 the tail mass p is 1
/// and its log is 0: the lower bound then demands ln P >= 0, which no
/// finite sample satisfies, while the upper bound holds trivially.
SandwichReport tail_sandwich(
    const EcdfView& sample, const MDist& spec,
    std::vector<double> y_grid,
    const std::vector<std::pair<double, double>>& constant_grid);

/// Closed first and second moments of the stationary law:
/// ER = q/(1 - EM), ER2 = (q^2 + 2 q EM ER)/(1 - EM2).
struct MomentOracle {
  double er = 0.0;
  double er2 = 0.0;
};

MomentOracle moment_oracle(const MDist& spec, double q);

/// Simulates n_samples stationary values of the two-point multiplier with
/// P(M=1) = p and returns max_k |P_hat(R > k q) - p^k| over k = 0..k_max.
/// The stationary law is q * (1 + G) with G geometric, so the deviations
/// measure exactly how well the sampler realizes the known discrete law.
double geometric_check(double p, double q, std::uint64_t n_samples,
                       std::uint64_t k_max, Philox4x64& rng);

}  // namespace perp

#endif  // PERP_GOF_HPP
