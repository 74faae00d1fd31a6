#include "perp/extremes.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "perp/error.hpp"
#include "perp/io.hpp"

namespace perp {

ExceedanceRecords exceedances(const TailReservoir& reservoir, double u) {
  ExceedanceRecords out;
  out.indices = reservoir.exceedance_indices(u);
  out.path_length = reservoir.n_observed();
  out.threshold = u;
  return out;
}

std::string to_string(ThetaMethod m) {
  switch (m) {
    case ThetaMethod::theoretical: return "theoretical";
    case ThetaMethod::blocks: return "blocks";
    case ThetaMethod::runs: return "runs";
    case ThetaMethod::conditional: return "conditional";
  }
  return "?";
}

std::string to_json(const ExtremalIndexEstimate& est) {
  nlohmann::ordered_json j;
  j["theta_hat"] = est.theta_hat;
  j["method"] = to_string(est.method);
  j["u"] = est.u;
  j["params"] = est.param;
  j["n_exceed"] = est.n_exceed;
  j["se"] = est.se;
  if (est.clipped) j["clipped"] = true;
  return j.dump();
}

double theta_theoretical(const MDist& spec) {
  return 1.0 - spec.atom_at_one();
}

namespace {

void require_exceedances(const ExceedanceRecords& records, const char* who) {
  if (records.indices.empty()) {
    throw EstimationError(std::string(who) +
                          ": no exceedances of u = " +
                          format_double(records.threshold) +
                          "; lower the threshold");
  }
}

}  // namespace

ExtremalIndexEstimate ratio_estimate(const ClusterCounts& counts,
                                     ThetaMethod method, double u,
                                     double param) {
  if (counts.exceedances == 0) {
    throw EstimationError("ratio_estimate: no exceedances to form a ratio");
  }
  ExtremalIndexEstimate est;
  est.method = method;
  est.u = u;
  est.param = param;
  est.n_exceed = counts.exceedances;
  double theta = static_cast<double>(counts.clusters) /
                 static_cast<double>(counts.exceedances);
  if (theta > 1.0) {
    theta = 1.0;
    est.clipped = true;
  }
  if (theta <= 0.0) {
    // clusters >= 1 always holds for these estimators, but keep the clip
    // total.
    theta = 1.0 / static_cast<double>(counts.exceedances);
    est.clipped = true;
  }
  est.theta_hat = theta;
  est.se = std::sqrt(theta * (1.0 - theta) /
                     static_cast<double>(counts.exceedances));
  return est;
}

ClusterCounts count_block_clusters(const ExceedanceRecords& records,
                                   std::uint64_t block_len) {
  if (block_len < 2) {
    throw ConfigError("count_block_clusters: block_len must be >= 2");
  }
  ClusterCounts counts;
  counts.exceedances = records.indices.size();
  std::uint64_t prev_block = ~std::uint64_t{0};
  for (const std::uint64_t idx : records.indices) {
    const std::uint64_t blk = (idx - 1) / block_len;
    if (blk != prev_block) {
      ++counts.clusters;
      prev_block = blk;
    }
  }
  return counts;
}

ClusterCounts count_run_clusters(const ExceedanceRecords& records,
                                 std::uint64_t run_gap) {
  if (run_gap < 1) {
    throw ConfigError("count_run_clusters: run_gap must be >= 1");
  }
  ClusterCounts counts;
  const auto& idx = records.indices;
  counts.exceedances = idx.size();
  if (idx.empty()) return counts;
  for (std::size_t i = 0; i + 1 < idx.size(); ++i) {
    if (idx[i + 1] - idx[i] - 1 >= run_gap) ++counts.clusters;
  }
  ++counts.clusters;  // the final exceedance always closes its cluster
  return counts;
}

ExtremalIndexEstimate theta_blocks(const ExceedanceRecords& records,
                                   std::uint64_t block_len) {
  require_exceedances(records, "theta_blocks");
  return ratio_estimate(count_block_clusters(records, block_len),
                        ThetaMethod::blocks, records.threshold,
                        static_cast<double>(block_len));
}

ExtremalIndexEstimate theta_runs(const ExceedanceRecords& records,
                                 std::uint64_t run_gap) {
  require_exceedances(records, "theta_runs");
  return ratio_estimate(count_run_clusters(records, run_gap),
                        ThetaMethod::runs, records.threshold,
                        static_cast<double>(run_gap));
}

ExtremalIndexEstimate conditional_non_exceedance(
    const MDist& spec, double q, double u, std::uint64_t n_samples,
    Philox4x64& rng, std::uint64_t attempt_cap) {
  if (!(u >= q)) {
    throw ConfigError("conditional_non_exceedance: need u >= q (M R + q "
                      "always exceeds q)");
  }
  if (n_samples < 1) {
    throw ConfigError("conditional_non_exceedance: n_samples must be >= 1");
  }
  constexpr double kTol = 1e-12;
  constexpr std::uint64_t kMaxTerms = 1000000;
  std::uint64_t attempts = 0;
  std::uint64_t scored = 0;
  std::uint64_t non_exceed = 0;
  while (scored < n_samples) {
    if (attempts >= attempt_cap) {
      throw EstimationError(
          "conditional_non_exceedance: only " + std::to_string(scored) +
          " of " + std::to_string(n_samples) + " conditioned samples within " +
          std::to_string(attempt_cap) + " attempts; lower u");
    }
    ++attempts;
    const auto draw = sample_stationary(spec, q, kTol, kMaxTerms, rng);
    if (!(draw.value > u)) continue;
    const double m = spec.sample(rng);
    if (m * draw.value + q <= u) ++non_exceed;
    ++scored;
  }
  ExtremalIndexEstimate est;
  est.method = ThetaMethod::conditional;
  est.u = u;
  est.param = static_cast<double>(n_samples);
  est.n_exceed = n_samples;
  est.theta_hat =
      static_cast<double>(non_exceed) / static_cast<double>(n_samples);
  est.se = std::sqrt(est.theta_hat * (1.0 - est.theta_hat) /
                     static_cast<double>(n_samples));
  return est;
}

}  // namespace perp
