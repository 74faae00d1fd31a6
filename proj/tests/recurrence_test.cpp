#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "perp/error.hpp"
#include "perp/gof.hpp"
#include "perp/mdist.hpp"
#include "perp/recurrence.hpp"
#include "perp/rng.hpp"

using namespace perp;

TEST_SUITE_BEGIN("recurrence");

TEST_CASE("config validation names the offending field") {
  RecurrenceConfig cfg;
  cfg.q = 0.0;
  CHECK_THROWS_WITH_AS(cfg.validate(), "recurrence: q must be a positive real",
                       ConfigError);
  cfg.q = 1.0;
  cfg.n = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.n = 10;
  cfg.init = StationaryInit{0.0, 100};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.init = FixedInit{-1.0};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.init = StationaryInit{};
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("stationary sampler reproduces the closed-form moments") {
  // For the uniform multiplier and q = 1 the stationary law has
  // E R = q/(1 - E M) = 2 and E R^2 = (q^2 + 2 q E M E R)/(1 - E M^2) = 4.5.
  const MDist u = MDist::beta(1.0, 1.0);
  const auto oracle = moment_oracle(u, 1.0);
  CHECK(oracle.er == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(oracle.er2 == doctest::Approx(4.5).epsilon(1e-14));

  auto rng = replica_rng(2024, 0, Stream::stationary_sample);
  const std::size_t n = 2000000;
  double s1 = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto draw = sample_stationary(u, 1.0, 1e-12, 1000000, rng);
    CHECK_FALSE(draw.truncated_at_cap);
    s1 += draw.value;
    s2 += draw.value * draw.value;
  }
  const double mean = s1 / static_cast<double>(n);
  const double m2 = s2 / static_cast<double>(n);
  // Var R = 0.5, so 5 sigma of the sample mean is ~0.0025.
  CHECK(mean == doctest::Approx(2.0).epsilon(0.0015));
  CHECK(m2 == doctest::Approx(4.5).epsilon(0.005));
}

TEST_CASE("stationary draws stop when the partial product hits tolerance") {
  const MDist u = MDist::beta(1.0, 1.0);
  auto rng = replica_rng(5, 0, Stream::stationary_sample);
  // E[ln M] = -1 for the uniform law, so the product needs about
  // ln(1/tol) terms; 1e-12 means ~28 on average.
  double total_terms = 0.0;
  for (int i = 0; i < 2000; ++i) {
    const auto draw = sample_stationary(u, 1.0, 1e-12, 1000000, rng);
    CHECK(draw.value >= 1.0);  // the series starts at q * 1
    CHECK_FALSE(draw.truncated_at_cap);
    total_terms += static_cast<double>(draw.terms);
  }
  CHECK(total_terms / 2000.0 > 20.0);
  CHECK(total_terms / 2000.0 < 40.0);

  // A cap below the typical term count must be reported, not hidden.
  auto rng2 = replica_rng(5, 0, Stream::stationary_sample);
  const auto capped = sample_stationary(u, 1.0, 1e-12, 3, rng2);
  CHECK(capped.truncated_at_cap);
  CHECK(capped.terms == 3);
}

TEST_CASE("paths forget their starting point geometrically fast") {
  // Two paths driven by identical multipliers from different starts
  // differ by r0 * prod M_i, which is ~e^{-k} after k uniform steps; by
  // k = 500 the gap is far below one ulp of the values themselves.
  const MDist u = MDist::beta(1.0, 1.0);
  RecurrenceConfig lo;
  lo.n = 500;
  lo.seed = 77;
  lo.init = FixedInit{0.0};
  RecurrenceConfig hi = lo;
  hi.init = FixedInit{100.0};

  const auto end_lo = simulate_path(lo, u, 0, [](std::uint64_t, double) {});
  const auto end_hi = simulate_path(hi, u, 0, [](std::uint64_t, double) {});
  CHECK(end_lo.final_value == doctest::Approx(end_hi.final_value).epsilon(1e-14));
  CHECK(end_lo.n == 500);
  CHECK(end_hi.max >= end_hi.final_value);
}

TEST_CASE("path summary is consistent with the streamed values") {
  const MDist u = MDist::beta(2.0, 1.0);
  RecurrenceConfig cfg;
  cfg.n = 1000;
  cfg.seed = 3;
  std::vector<double> streamed;
  const auto summary = simulate_path(cfg, u, 2, [&](std::uint64_t k, double v) {
    CHECK(k == streamed.size() + 1);
    streamed.push_back(v);
  });
  CHECK(streamed.size() == 1000);
  CHECK(summary.final_value == streamed.back());
  const auto max_it = std::max_element(streamed.begin(), streamed.end());
  CHECK(summary.max == *max_it);
  CHECK(summary.max_index ==
        static_cast<std::uint64_t>(max_it - streamed.begin()) + 1);
  const double mean =
      std::accumulate(streamed.begin(), streamed.end(), 0.0) / 1000.0;
  CHECK(summary.mean == doctest::Approx(mean).epsilon(1e-13));
  CHECK(summary.replica == 2);
  CHECK(summary.sub_seed == derive_subkey(2, Stream::path));
}

TEST_CASE("changing the init policy does not shift the path randomness") {
  // Initialization draws from its own stream, so the same path stream
  // drives both runs and the trajectories merge once the start is
  // forgotten.
  const MDist u = MDist::beta(1.0, 1.0);
  RecurrenceConfig a;
  a.n = 400;
  a.seed = 9;
  a.init = StationaryInit{};
  RecurrenceConfig b = a;
  b.init = BurnInInit{50};
  const auto ra = simulate_path(a, u, 1, [](std::uint64_t, double) {});
  const auto rb = simulate_path(b, u, 1, [](std::uint64_t, double) {});
  CHECK(ra.final_value == doctest::Approx(rb.final_value).epsilon(1e-13));
}

TEST_CASE("block maxima partition the path exactly") {
  const MDist u = MDist::beta(1.0, 1.0);
  RecurrenceConfig cfg;
  cfg.seed = 42;
  cfg.init = StationaryInit{};

  const auto maxima = block_maxima(cfg, u, 10, 20, 0);
  REQUIRE(maxima.size() == 20);

  RecurrenceConfig manual = cfg;
  manual.n = 200;
  std::vector<double> path;
  simulate_path(manual, u, 0,
                [&](std::uint64_t, double v) { path.push_back(v); });
  for (std::size_t b = 0; b < 20; ++b) {
    const double m =
        *std::max_element(path.begin() + 10 * b, path.begin() + 10 * (b + 1));
    CHECK(maxima[b] == m);
  }

  CHECK_THROWS_AS(block_maxima(RecurrenceConfig{1.0, 1, 1, 0, FixedInit{0.0}},
                               u, 10, 2, 0),
                  ConfigError);
}

TEST_CASE("ensembles are invariant under the thread count") {
  const MDist u = MDist::beta(2.0, 1.0);
  const auto job = [&](std::uint32_t replica) {
    RecurrenceConfig cfg;
    cfg.n = 500;
    cfg.seed = 31;
    const auto s = simulate_path(cfg, u, replica, [](std::uint64_t, double) {});
    return s.final_value;
  };
  const auto serial = ensemble(16, 1, job);
  const auto parallel = ensemble(16, 8, job);
  const auto oversubscribed = ensemble(16, 64, job);
  CHECK(serial == parallel);
  CHECK(serial == oversubscribed);
  // Replica index, not scheduling, decides the draw.
  CHECK(serial[3] == job(3));
}

TEST_CASE("ensemble failures name the replica that threw") {
  const auto job = [](std::uint32_t replica) -> int {
    if (replica == 3) throw NumericError("synthetic failure");
    return static_cast<int>(replica);
  };
  try {
    ensemble(8, 4, job);
    FAIL("expected an Error");
  } catch (const Error& e) {
    const std::string what = e.what();
    CHECK(what.find("replica 3") != std::string::npos);
    CHECK(what.find("synthetic failure") != std::string::npos);
  }
}

TEST_CASE("tail reservoir answers exactly what a full sort would") {
  auto rng = replica_rng(8, 0, Stream::path);
  const std::size_t n = 5000;
  std::vector<double> values(n);
  for (auto& v : values) v = rng.next_double();

  TailReservoir res(512);
  for (std::size_t i = 0; i < n; ++i) {
    res.observe(i + 1, values[i]);
  }
  CHECK(res.n_observed() == n);
  CHECK(res.retained() == 512);

  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  for (const double level : {0.95, 0.99, 0.999, 1.0}) {
    const auto rank = static_cast<std::size_t>(
        std::ceil(level * static_cast<double>(n)));
    CHECK(res.quantile(level) == sorted[rank - 1]);
  }

  // Ranks below the retained window must refuse rather than extrapolate.
  CHECK_THROWS_AS(res.quantile(0.5), EstimationError);

  // Exceedance positions above the window match brute force.
  const double u = sorted[n - 100];
  std::vector<std::uint64_t> brute;
  for (std::size_t i = 0; i < n; ++i) {
    if (values[i] > u) brute.push_back(i + 1);
  }
  CHECK(res.exceedance_indices(u) == brute);
  CHECK_THROWS_AS(res.exceedance_indices(sorted[0]), EstimationError);
}

TEST_CASE("tail reservoir with spare capacity retains everything") {
  TailReservoir res(100);
  for (std::uint64_t i = 1; i <= 60; ++i) {
    res.observe(i, static_cast<double>(i % 7));
  }
  CHECK(res.retained() == 60);
  // Nothing was evicted, so even threshold 0 exceedances are exact.
  CHECK(res.exceedance_indices(-1.0).size() == 60);
  CHECK(res.quantile(1e-9) >= 0.0);  // rank clamps to the minimum
}

TEST_CASE("queries interleaved with streaming do not corrupt the window") {
  auto rng = replica_rng(15, 0, Stream::path);
  TailReservoir res(64);
  std::vector<double> values;
  for (std::uint64_t i = 1; i <= 4000; ++i) {
    const double v = rng.next_double();
    values.push_back(v);
    res.observe(i, v);
    if (i % 500 == 0) {
      (void)res.quantile(0.999);  // forces a sort mid-stream
    }
  }
  std::sort(values.begin(), values.end());
  CHECK(res.quantile(0.999) == values[static_cast<std::size_t>(
                                   std::ceil(0.999 * 4000)) - 1]);
}

TEST_CASE("pooled tails agree with sorting the concatenated streams") {
  auto rng = replica_rng(21, 0, Stream::path);
  std::vector<TailReservoir> parts(3, TailReservoir(256));
  std::vector<double> all;
  for (std::size_t p = 0; p < 3; ++p) {
    for (std::uint64_t i = 1; i <= 2000; ++i) {
      const double v = rng.next_double();
      parts[p].observe(i, v);
      all.push_back(v);
    }
  }
  const PooledTail pooled =
      pool_tails({&parts[0], &parts[1], &parts[2]});
  CHECK(pooled.n_observed == 6000);

  std::sort(all.begin(), all.end());
  for (const double level : {0.97, 0.99, 0.999}) {
    const auto rank = static_cast<std::size_t>(std::ceil(level * 6000.0));
    CHECK(pooled.quantile(level) == all[rank - 1]);
  }
  // Below the least evicting part's window the pooled rank is not exact.
  CHECK_THROWS_AS(pooled.quantile(0.5), EstimationError);
}

TEST_CASE("pooling keeps exactness when no part ever evicted") {
  TailReservoir a(100), b(100);
  for (std::uint64_t i = 1; i <= 50; ++i) {
    a.observe(i, static_cast<double>(i));
    b.observe(i, static_cast<double>(i) + 0.5);
  }
  const PooledTail pooled = pool_tails({&a, &b});
  CHECK(pooled.n_observed == 100);
  CHECK(pooled.quantile(0.01) == 1.0);  // full range stays answerable
  CHECK(pooled.quantile(1.0) == 50.5);
}

TEST_SUITE_END();
