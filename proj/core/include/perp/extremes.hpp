#ifndef PERP_EXTREMES_HPP
#define PERP_EXTREMES_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "perp/mdist.hpp"
#include "perp/recurrence.hpp"

namespace perp {

/// Positions of the path values above a threshold, as streamed by an
/// observer; everything the clustering estimators need.
struct ExceedanceRecords {
  std::vector<std::uint64_t> indices;  // ascending, 1-based path positions
  std::uint64_t path_length = 0;
  double threshold = 0.0;
};

/// Extracts exceedance records from a streamed tail reservoir; exact as
/// long as the reservoir retained everything above u.
ExceedanceRecords exceedances(const TailReservoir& reservoir, double u);

enum class ThetaMethod { theoretical, blocks, runs, conditional };

std::string to_string(ThetaMethod m);

struct ExtremalIndexEstimate {
  double theta_hat = 1.0;
  ThetaMethod method = ThetaMethod::theoretical;
  double u = 0.0;       // threshold (0 for theoretical)
  double param = 0.0;   // block length / run gap / sample count
  std::uint64_t n_exceed = 0;
  double se = 0.0;      // binomial-style approximation, ignores dependence
  bool clipped = false; // point estimate was pulled back into (0, 1]
};

/// Serializes to JSON {theta_hat, method, u, params, n_exceed, se}.
std::string to_json(const ExtremalIndexEstimate& est);

/// The limiting extremal index: 1 - P(M = 1).
double theta_theoretical(const MDist& spec);

/// Raw material of the ratio estimators; keeping the counts around lets
/// callers pool them across replicas before forming the ratio.
struct ClusterCounts {
  std::uint64_t clusters = 0;
  std::uint64_t exceedances = 0;
};

/// Number of distinct length-block_len blocks containing an exceedance.
ClusterCounts count_block_clusters(const ExceedanceRecords& records,
                                   std::uint64_t block_len);

/// Number of cluster-ending exceedances: ones followed by at least
/// run_gap non-exceedances or by the end of the path.
ClusterCounts count_run_clusters(const ExceedanceRecords& records,
                                 std::uint64_t run_gap);

/// clusters / exceedances with a binomial-style standard error, clipped
/// into (0, 1].
ExtremalIndexEstimate ratio_estimate(const ClusterCounts& counts,
                                     ThetaMethod method, double u,
                                     double param);

/// Blocks estimator: partitions the path into consecutive blocks of
/// block_len steps and returns
///   (# blocks containing an exceedance) / (# exceedances).
ExtremalIndexEstimate theta_blocks(const ExceedanceRecords& records,
                                   std::uint64_t block_len);

/// Runs estimator: an exceedance ends a cluster when at least run_gap
/// non-exceedances (or the end of the path) follow it;
///   theta_hat = (# cluster-ending exceedances) / (# exceedances).
ExtremalIndexEstimate theta_runs(const ExceedanceRecords& records,
                                 std::uint64_t run_gap);

/// Monte Carlo estimate of P(M R + q <= u | R > u) with M fresh and
/// independent of the stationary R, by plain rejection on R > u. Draws
/// until n_samples conditioned pairs are scored or attempt_cap stationary
/// draws are spent (then throws EstimationError with the achieved count).
ExtremalIndexEstimate conditional_non_exceedance(
    const MDist& spec, double q, double u, std::uint64_t n_samples,
    Philox4x64& rng, std::uint64_t attempt_cap = 100000000);

}  // namespace perp

#endif  // PERP_EXTREMES_HPP
