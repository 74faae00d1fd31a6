#ifndef PERP_RECURRENCE_HPP
#define PERP_RECURRENCE_HPP

#include <atomic>
#include <concepts>
#include <cstdint>
#include <limits>
#include <string>
#include <thread>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "perp/error.hpp"
#include "perp/rng.hpp"

namespace perp {

// ---- configuration ----

/// Start the path at a fixed value.
struct FixedInit {
  double r0 = 0.0;
};

/// Draw the start from the stationary law via the truncated backward
/// series; truncation bias is at most tolerance * E[R].
struct StationaryInit {
  double tolerance = 1e-12;
  std::uint64_t max_terms = 1000000;
};

/// Start at q and discard a prefix of the path instead of sampling the
/// stationary law directly.
struct BurnInInit {
  std::uint64_t steps = 1000;
};

using InitPolicy = std::variant<FixedInit, StationaryInit, BurnInInit>;

struct RecurrenceConfig {
  double q = 1.0;
  std::uint64_t n = 1;
  std::uint32_t replicas = 1;
  std::uint64_t seed = 0;
  InitPolicy init = StationaryInit{};

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// One update of the recurrence: r -> m*r + q. Always at least q.
inline double step(double r, double m, double q) { return m * r + q; }

/// Anything that can draw one multiplier in [0,1] from caller-owned
/// RNG state. MDist satisfies this; tests use constant stubs.
template <class S>
concept MultiplierSampler = requires(const S& s, Philox4x64& g) {
  { s.sample(g) } -> std::convertible_to<double>;
};

// ---- stationary sampling ----

struct StationaryDraw {
  double value = 0.0;
  std::uint64_t terms = 0;       // number of multiplier draws consumed
  bool truncated_at_cap = false; // hit max_terms with product > tolerance
};

/// Draws one stationary sample as q times the backward series
/// 1 + M1 + M1*M2 + ..., truncated at the first partial product <=
/// tolerance (or at max_terms, setting truncated_at_cap).
template <MultiplierSampler S>
StationaryDraw sample_stationary(const S& spec, double q, double tolerance,
                                 std::uint64_t max_terms, Philox4x64& rng) {
  StationaryDraw out;
  double sum = 1.0;
  double prod = 1.0;
  while (out.terms < max_terms) {
    prod *= spec.sample(rng);
    ++out.terms;
    if (prod <= tolerance) {
      out.value = q * sum;
      return out;
    }
    sum += prod;
  }
  out.value = q * sum;
  out.truncated_at_cap = true;
  return out;
}

// ---- path simulation ----

struct PathSummary {
  double final_value = 0.0;
  double max = 0.0;
  std::uint64_t max_index = 0;  // 1-based step index of the running max
  double mean = 0.0;            // time average over the n streamed values
  std::uint64_t n = 0;
  std::uint32_t replica = 0;
  std::uint64_t sub_seed = 0;   // derived key of the path stream
  bool init_truncated = false;  // stationary init hit its term cap
  std::vector<double> block_maxima;  // filled only by block-maxima runs
};

template <class Obs>
concept PathObserver = requires(Obs& o, std::uint64_t i, double v) {
  o(i, v);
};

/// Resolves the configured initialization for one replica. Stationary
/// draws and burn-in consume the stationary-init stream, never the path
/// stream, so changing the policy does not shift the path randomness.
template <MultiplierSampler S>
double initial_value(const RecurrenceConfig& cfg, const S& spec,
                     std::uint32_t replica, bool* truncated = nullptr) {
  if (const auto* fixed = std::get_if<FixedInit>(&cfg.init)) {
    return fixed->r0;
  }
  auto rng = replica_rng(cfg.seed, replica, Stream::stationary_init);
  if (const auto* st = std::get_if<StationaryInit>(&cfg.init)) {
    const auto draw =
        sample_stationary(spec, cfg.q, st->tolerance, st->max_terms, rng);
    if (truncated) *truncated = draw.truncated_at_cap;
    return draw.value;
  }
  const auto& burn = std::get<BurnInInit>(cfg.init);
  double r = cfg.q;
  for (std::uint64_t k = 0; k < burn.steps; ++k) {
    r = step(r, spec.sample(rng), cfg.q);
  }
  return r;
}

/// Iterates the recurrence n times from the configured initialization,
/// streaming each value (1-based step index) to the observer. The full
/// path is never materialized.
template <MultiplierSampler S, PathObserver Obs>
PathSummary simulate_path(const RecurrenceConfig& cfg, const S& spec,
                          std::uint32_t replica, Obs&& observe) {
  cfg.validate();
  PathSummary out;
  out.replica = replica;
  out.n = cfg.n;
  out.sub_seed = derive_subkey(replica, Stream::path);

  bool trunc = false;
  double r = initial_value(cfg, spec, replica, &trunc);
  out.init_truncated = trunc;

  auto rng = replica_rng(cfg.seed, replica, Stream::path);
  double running_max = -1.0;
  double sum = 0.0;
  for (std::uint64_t k = 1; k <= cfg.n; ++k) {
    r = step(r, spec.sample(rng), cfg.q);
    if (r > running_max) {
      running_max = r;
      out.max_index = k;
    }
    sum += r;
    observe(k, r);
  }
  out.final_value = r;
  out.max = running_max;
  out.mean = sum / static_cast<double>(cfg.n);
  return out;
}

/// One long stationary path of block_len * n_blocks steps partitioned
/// into consecutive blocks; returns the per-block maxima in order.
template <MultiplierSampler S>
std::vector<double> block_maxima(const RecurrenceConfig& cfg, const S& spec,
                                 std::uint64_t block_len,
                                 std::uint64_t n_blocks,
                                 std::uint32_t replica) {
  if (block_len < 1) throw ConfigError("block_maxima: block_len must be >= 1");
  if (n_blocks < 1) throw ConfigError("block_maxima: n_blocks must be >= 1");
  if (!std::holds_alternative<StationaryInit>(cfg.init)) {
    throw ConfigError("block_maxima: stationary initialization required");
  }
  RecurrenceConfig run = cfg;
  run.n = block_len * n_blocks;
  std::vector<double> maxima(n_blocks, -1.0);
  auto summary = simulate_path(run, spec, replica,
                               [&](std::uint64_t k, double v) {
                                 const std::uint64_t b = (k - 1) / block_len;
                                 if (v > maxima[b]) maxima[b] = v;
                               });
  (void)summary;
  return maxima;
}

// ---- deterministic parallel ensembles ----

/// Runs job(replica) for replica = 0..replicas-1 on up to `threads`
/// workers and returns results indexed by replica. The merged output is a
/// pure function of the job alone: scheduling only decides who computes
/// which slot, never what lands in it.
template <class Job,
          class Result = std::invoke_result_t<Job&, std::uint32_t>>
std::vector<Result> ensemble(std::uint32_t replicas, unsigned threads,
                             Job job) {
  if (replicas < 1) throw ConfigError("ensemble: replicas must be >= 1");
  std::vector<Result> results(replicas);
  if (threads <= 1 || replicas == 1) {
    for (std::uint32_t rep = 0; rep < replicas; ++rep) {
      results[rep] = job(rep);
    }
    return results;
  }
  std::atomic<std::uint32_t> next{0};
  std::atomic<bool> failed{false};
  std::vector<std::string> errors(replicas);
  const unsigned workers =
      std::min<unsigned>(threads, static_cast<unsigned>(replicas));
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (true) {
        const std::uint32_t rep = next.fetch_add(1);
        if (rep >= replicas) return;
        try {
          results[rep] = job(rep);
        } catch (const std::exception& e) {
          errors[rep] = e.what();
          failed.store(true);
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failed.load()) {
    for (std::uint32_t rep = 0; rep < replicas; ++rep) {
      if (!errors[rep].empty()) {
        throw Error("replica " + std::to_string(rep) +
                    " failed: " + errors[rep]);
      }
    }
  }
  return results;
}

// ---- streaming tail retention ----

/// Streaming observer retaining the K largest (value, index) pairs of a
/// path. Serves upper quantiles and exceedance positions without holding
/// the path; queries state explicitly when the retained window cannot
/// answer them.
class TailReservoir {
 public:
  struct Entry {
    double value;
    std::uint64_t index;  // 1-based position in the path
  };

  explicit TailReservoir(std::size_t capacity);

  void operator()(std::uint64_t index, double value) { observe(index, value); }
  void observe(std::uint64_t index, double value);

  std::size_t capacity() const { return capacity_; }
  std::size_t retained() const { return heap_.size(); }
  std::uint64_t n_observed() const { return n_observed_; }

  /// Smallest retained value; only meaningful once retained() > 0.
  double min_retained() const;

  /// Order statistic at 1-based rank ceil(level * n_observed) of the full
  /// stream (inverse-ECDF convention). Throws EstimationError when the
  /// rank falls below the retained window.
  double quantile(double level) const;

  /// Ascending path positions of all values strictly above u. Exact only
  /// when every such value is retained; otherwise throws EstimationError.
  std::vector<std::uint64_t> exceedance_indices(double u) const;

  /// Retained values sorted descending (largest first).
  std::vector<double> sorted_values_desc() const;

 private:
  void ensure_sorted() const;

  std::size_t capacity_;
  std::uint64_t n_observed_ = 0;
  mutable std::vector<Entry> heap_;  // min-heap on value
  mutable bool sorted_ = false;      // heap_ currently sorted descending
};

/// Upper-tail view pooled from one or more reservoirs (e.g. the replicas
/// of an ensemble). Ranks against the full pooled stream are exact only
/// down to `floor`: below it some replica may have evicted values.
struct PooledTail {
  std::vector<double> values_desc;
  std::uint64_t n_observed = 0;
  double floor = -std::numeric_limits<double>::infinity();

  /// Order statistic at 1-based rank ceil(level * n_observed) of the
  /// pooled stream; EstimationError when it falls below the exact window.
  double quantile(double level) const;
};

PooledTail pool_tails(const std::vector<const TailReservoir*>& parts);

}  // namespace perp

#endif  // PERP_RECURRENCE_HPP
