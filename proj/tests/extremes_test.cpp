#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "perp/error.hpp"
#include "perp/extremes.hpp"
#include "perp/mdist.hpp"
#include "perp/recurrence.hpp"
#include "perp/rng.hpp"

using namespace perp;

namespace {

ExceedanceRecords records_of(std::vector<std::uint64_t> indices,
                             std::uint64_t path_length, double u) {
  ExceedanceRecords r;
  r.indices = std::move(indices);
  r.path_length = path_length;
  r.threshold = u;
  return r;
}

}  // namespace

TEST_SUITE_BEGIN("extremes");

TEST_CASE("theoretical extremal index is one minus the atom at one") {
  CHECK(theta_theoretical(MDist::beta(1.0, 1.0)) == 1.0);
  CHECK(theta_theoretical(MDist::rfamily(2.0)) == 1.0);
  CHECK(theta_theoretical(MDist::atom_mixture(0.3, MDist::beta(1.0, 1.0))) ==
        doctest::Approx(0.7));
  CHECK(theta_theoretical(MDist::twopoint(0.5)) == doctest::Approx(0.5));
}

TEST_CASE("block clusters count distinct occupied blocks") {
  // Four exceedances in four different length-20 blocks: theta_hat = 1.
  const auto spread = records_of({5, 25, 45, 65}, 80, 10.0);
  const auto c1 = count_block_clusters(spread, 20);
  CHECK(c1.clusters == 4);
  CHECK(c1.exceedances == 4);
  CHECK(theta_blocks(spread, 20).theta_hat == doctest::Approx(1.0));

  // Four exceedances inside one block: theta_hat = 1/4.
  const auto packed = records_of({21, 22, 23, 24}, 80, 10.0);
  CHECK(count_block_clusters(packed, 20).clusters == 1);
  CHECK(theta_blocks(packed, 20).theta_hat == doctest::Approx(0.25));

  // Block boundaries are [1,20], [21,40], ...: index 20 and 21 differ.
  const auto split = records_of({20, 21}, 40, 10.0);
  CHECK(count_block_clusters(split, 20).clusters == 2);

  CHECK_THROWS_AS(count_block_clusters(spread, 1), ConfigError);
}

TEST_CASE("run clusters count cluster-ending exceedances") {
  // Gaps of 39 with run_gap 20: every exceedance ends its own cluster.
  const auto isolated = records_of({10, 50, 90}, 120, 10.0);
  const auto r1 = count_run_clusters(isolated, 20);
  CHECK(r1.clusters == 3);
  CHECK(theta_runs(isolated, 20).theta_hat == doctest::Approx(1.0));

  // A contiguous run is one cluster regardless of its length.
  const auto contiguous = records_of({10, 11, 12, 13}, 120, 10.0);
  CHECK(count_run_clusters(contiguous, 5).clusters == 1);
  CHECK(theta_runs(contiguous, 5).theta_hat == doctest::Approx(0.25));

  // Two bursts separated by more than the gap: 2 clusters, 5 exceedances.
  const auto bursts = records_of({10, 11, 40, 41, 42}, 120, 10.0);
  const auto r2 = count_run_clusters(bursts, 10);
  CHECK(r2.clusters == 2);
  CHECK(theta_runs(bursts, 10).theta_hat == doctest::Approx(0.4));

  // The gap is counted in strictly-between positions: indices 10 and 21
  // have exactly 10 non-exceedances between them.
  const auto edge = records_of({10, 21}, 40, 10.0);
  CHECK(count_run_clusters(edge, 10).clusters == 2);
  CHECK(count_run_clusters(edge, 11).clusters == 1);

  CHECK_THROWS_AS(count_run_clusters(isolated, 0), ConfigError);
}

TEST_CASE("ratio estimates clip and carry binomial standard errors") {
  const auto est = ratio_estimate({3, 12}, ThetaMethod::blocks, 7.5, 50.0);
  CHECK(est.theta_hat == doctest::Approx(0.25));
  CHECK(est.method == ThetaMethod::blocks);
  CHECK(est.u == 7.5);
  CHECK(est.param == 50.0);
  CHECK(est.n_exceed == 12);
  CHECK(est.se == doctest::Approx(std::sqrt(0.25 * 0.75 / 12.0)));
  CHECK_FALSE(est.clipped);

  const auto clipped = ratio_estimate({15, 12}, ThetaMethod::runs, 7.5, 20.0);
  CHECK(clipped.theta_hat == 1.0);
  CHECK(clipped.clipped);

  CHECK_THROWS_AS(ratio_estimate({0, 0}, ThetaMethod::blocks, 1.0, 2.0),
                  EstimationError);
  CHECK_THROWS_AS(theta_blocks(records_of({}, 100, 99.0), 10),
                  EstimationError);
}

TEST_CASE("reservoir exceedances feed the estimators exactly") {
  TailReservoir res(64);
  // A handcrafted path: exceedances of 5.0 at positions 7, 8, and 30.
  for (std::uint64_t k = 1; k <= 40; ++k) {
    double v = 1.0;
    if (k == 7) v = 6.0;
    if (k == 8) v = 5.5;
    if (k == 30) v = 7.0;
    res.observe(k, v);
  }
  const auto recs = exceedances(res, 5.0);
  CHECK(recs.indices == std::vector<std::uint64_t>{7, 8, 30});
  CHECK(recs.path_length == 40);
  CHECK(recs.threshold == 5.0);

  CHECK(theta_blocks(recs, 10).theta_hat == doctest::Approx(2.0 / 3.0));
  CHECK(theta_runs(recs, 5).theta_hat == doctest::Approx(2.0 / 3.0));
  CHECK(theta_runs(recs, 1).theta_hat == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("serialized estimates carry their method and diagnostics") {
  auto est = ratio_estimate({4, 10}, ThetaMethod::runs, 3.25, 20.0);
  const std::string j = to_json(est);
  CHECK(j.find("\"method\":\"runs\"") != std::string::npos);
  CHECK(j.find("\"n_exceed\":10") != std::string::npos);
  CHECK(j.find("clipped") == std::string::npos);

  est.clipped = true;
  CHECK(to_json(est).find("\"clipped\":true") != std::string::npos);
}

TEST_CASE("conditional estimator recovers the uniform non-exceedance rate") {
  // For the uniform multiplier at the stationary 99th percentile the
  // conditional non-exceedance probability is ~0.69 (Monte Carlo ground
  // truth from an independent 1e8-draw run).
  const MDist u = MDist::beta(1.0, 1.0);
  auto rng = replica_rng(17, 0, Stream::conditional);
  const double u99 = 4.084;
  const auto est = conditional_non_exceedance(u, 1.0, u99, 200, rng);
  CHECK(est.method == ThetaMethod::conditional);
  CHECK(est.n_exceed == 200);
  CHECK(est.param == 200.0);
  // 4 standard errors around the ground truth.
  CHECK(std::abs(est.theta_hat - 0.690) < 4.0 * 0.0327 + 0.01);
  CHECK(est.se == doctest::Approx(std::sqrt(est.theta_hat *
                                            (1.0 - est.theta_hat) / 200.0)));
}

TEST_CASE("conditional estimator reports hopeless thresholds honestly") {
  const MDist u = MDist::beta(1.0, 1.0);
  auto rng = replica_rng(19, 0, Stream::conditional);
  // P(R > 40) ~ e^{-40 ln 40 + ...}, far beyond any 10^4 attempts.
  try {
    conditional_non_exceedance(u, 1.0, 40.0, 10, rng, 10000);
    FAIL("expected EstimationError");
  } catch (const EstimationError& e) {
    const std::string what = e.what();
    CHECK(what.find("0 of 10") != std::string::npos);
    CHECK(what.find("10000") != std::string::npos);
  }

  CHECK_THROWS_AS(conditional_non_exceedance(u, 1.0, 0.5, 10, rng),
                  ConfigError);
}

TEST_CASE("blocks and runs estimators agree on a long uniform path") {
  // At the 99.5th percentile of a 1e6-step stationary path both cluster
  // estimators land near 0.63 and within 0.05 of each other.
  const MDist u = MDist::beta(1.0, 1.0);
  RecurrenceConfig cfg;
  cfg.n = 1000000;
  cfg.seed = 2025;
  cfg.init = StationaryInit{};

  TailReservoir res(20000);
  simulate_path(cfg, u, 0,
                [&](std::uint64_t k, double v) { res.observe(k, v); });
  const double u_star = res.quantile(0.995);
  const auto recs = exceedances(res, u_star);
  CHECK(recs.indices.size() > 4000);  // ~5000 exceedances expected

  const auto blocks = theta_blocks(recs, 50);
  const auto runs = theta_runs(recs, 20);
  CHECK(blocks.theta_hat > 0.59);
  CHECK(blocks.theta_hat < 0.68);
  CHECK(runs.theta_hat > 0.59);
  CHECK(runs.theta_hat < 0.68);
  CHECK(std::abs(blocks.theta_hat - runs.theta_hat) < 0.05);
}

TEST_SUITE_END();
