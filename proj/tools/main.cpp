// perp: command line front end for simulating the recurrence
// R_k = M_k R_{k-1} + q and studying the extremes of its paths.
//
// Subcommands: simulate | maxima-gof | norming | extremal-index | tailcheck.
// Every command is a pure function of (config, seed): outputs are
// byte-identical across reruns and across --threads settings.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "perp/error.hpp"
#include "perp/extremes.hpp"
#include "perp/gof.hpp"
#include "perp/io.hpp"
#include "perp/mdist.hpp"
#include "perp/norming.hpp"
#include "perp/recurrence.hpp"
#include "perp/rng.hpp"
#include "perp_version.hpp"

namespace {

using Json = nlohmann::ordered_json;
using namespace perp;

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

// ---- config file resolution ----
//
// Precedence: command-line flag > PERP_SEED (seed only) > config file >
// built-in default. Config keys are the long option names with dashes
// replaced by underscores; keys under a `[subcommand]` section apply to
// that subcommand only and shadow top-level keys.

struct Cfg {
  std::map<std::string, std::string> kv;
  std::string section;  // active subcommand name

  std::optional<std::string> lookup(const std::string& key) const {
    auto it = kv.find(section + "." + key);
    if (it != kv.end()) return it->second;
    it = kv.find(key);
    if (it != kv.end()) return it->second;
    return std::nullopt;
  }
};

bool flag_given(const CLI::Option* opt) { return opt && opt->count() > 0; }

std::string resolve_string(const CLI::Option* opt, const std::string& flag_val,
                           const Cfg& cfg, const std::string& key,
                           const std::string& fallback) {
  if (flag_given(opt)) return flag_val;
  if (auto v = cfg.lookup(key)) return *v;
  return fallback;
}

double resolve_double(const CLI::Option* opt, double flag_val, const Cfg& cfg,
                      const std::string& key, double fallback) {
  if (flag_given(opt)) return flag_val;
  if (auto v = cfg.lookup(key)) {
    return parse_double(*v, "config key '" + key + "'");
  }
  return fallback;
}

std::uint64_t resolve_u64(const CLI::Option* opt, std::uint64_t flag_val,
                          const Cfg& cfg, const std::string& key,
                          std::uint64_t fallback) {
  if (flag_given(opt)) return flag_val;
  if (auto v = cfg.lookup(key)) {
    return parse_u64(*v, "config key '" + key + "'");
  }
  return fallback;
}

bool parse_bool_text(const std::string& text, const std::string& what) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError(what + ": expected a boolean (true/false/1/0/yes/no), "
                    "got '" + text + "'");
}

bool resolve_bool(const CLI::Option* opt, bool flag_val, const Cfg& cfg,
                  const std::string& key, bool fallback) {
  if (flag_given(opt)) return flag_val;
  if (auto v = cfg.lookup(key)) {
    return parse_bool_text(*v, "config key '" + key + "'");
  }
  return fallback;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> parts;
  std::string token;
  std::istringstream is(text);
  while (std::getline(is, token, ',')) {
    const auto first = token.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    const auto last = token.find_last_not_of(" \t");
    parts.push_back(token.substr(first, last - first + 1));
  }
  return parts;
}

std::vector<double> resolve_double_list(const CLI::Option* opt,
                                        const std::vector<double>& flag_val,
                                        const Cfg& cfg, const std::string& key,
                                        const std::vector<double>& fallback) {
  if (flag_given(opt)) return flag_val;
  if (auto v = cfg.lookup(key)) {
    std::vector<double> out;
    for (const auto& part : split_list(*v)) {
      out.push_back(parse_double(part, "config key '" + key + "'"));
    }
    return out;
  }
  return fallback;
}

std::vector<std::uint64_t> resolve_u64_list(
    const CLI::Option* opt, const std::vector<std::uint64_t>& flag_val,
    const Cfg& cfg, const std::string& key,
    const std::vector<std::uint64_t>& fallback) {
  if (flag_given(opt)) return flag_val;
  if (auto v = cfg.lookup(key)) {
    std::vector<std::uint64_t> out;
    for (const auto& part : split_list(*v)) {
      out.push_back(parse_u64(part, "config key '" + key + "'"));
    }
    return out;
  }
  return fallback;
}

// ---- artifacts ----

struct OutputFile {
  std::string path;
  std::uintmax_t bytes = 0;
};

OutputFile write_text_file(const std::string& path,
                           const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open output file '" + path + "'");
  os << content;
  os.flush();
  if (!os) throw Error("write to '" + path + "' failed");
  os.close();
  return {path, std::filesystem::file_size(path)};
}

std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

Json parse_embedded(const std::string& json_text) {
  return Json::parse(json_text);
}

// ---- shared option block ----

struct CommonOpts {
  std::string dist_text;
  double q = 1.0;
  std::uint64_t seed = 0;
  std::uint32_t replicas = 1;
  unsigned threads = 1;
  std::string out;
  std::string manifest;
  bool allow_counterexample = false;
};

struct CommonCli {
  std::string config_path;
  std::string dist_text;
  double q = 1.0;
  std::uint64_t seed = 0;
  std::uint64_t replicas = 1;
  std::uint64_t threads = 1;
  std::string out;
  std::string manifest;
  bool allow_counterexample = false;

  CLI::Option* config_opt = nullptr;
  CLI::Option* dist_opt = nullptr;
  CLI::Option* q_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* replicas_opt = nullptr;
  CLI::Option* threads_opt = nullptr;
  CLI::Option* out_opt = nullptr;
  CLI::Option* manifest_opt = nullptr;
  CLI::Option* allow_opt = nullptr;
};

void add_common(CLI::App* sub, CommonCli& c) {
  c.config_opt = sub->add_option("--config", c.config_path,
                                 "Key=value config file with [subcommand] "
                                 "sections; flags win over file values");
  c.dist_opt = sub->add_option(
      "--dist", c.dist_text,
      "Multiplier law, e.g. 'family=beta alpha=2 beta=1'");
  c.q_opt = sub->add_option("--q", c.q, "Additive constant q > 0");
  c.seed_opt = sub->add_option("--seed", c.seed,
                               "Master seed (PERP_SEED overrides the config "
                               "file value; an explicit flag wins over both)");
  c.replicas_opt =
      sub->add_option("--replicas", c.replicas, "Independent replicas");
  c.threads_opt = sub->add_option(
      "--threads", c.threads,
      "Worker threads; never changes results, only wall time");
  c.out_opt = sub->add_option("--out", c.out, "Output file path");
  c.manifest_opt = sub->add_option(
      "--manifest", c.manifest,
      "Manifest path (default: <out>.manifest.json)");
  c.allow_opt = sub->add_flag(
      "--allow-counterexample", c.allow_counterexample,
      "Run even when the multiplier law violates the nongeometric-tail "
      "assumption");
}

CommonOpts resolve_common(const CommonCli& c, const Cfg& cfg,
                          const std::string& default_out) {
  CommonOpts out;
  out.dist_text = resolve_string(c.dist_opt, c.dist_text, cfg, "dist", "");
  if (out.dist_text.empty()) {
    throw ConfigError("no multiplier law given: pass --dist or set 'dist' "
                      "in the config file");
  }
  out.q = resolve_double(c.q_opt, c.q, cfg, "q", 1.0);

  if (flag_given(c.seed_opt)) {
    out.seed = c.seed;
  } else if (const char* env = std::getenv("PERP_SEED")) {
    out.seed = parse_u64(env, "PERP_SEED");
  } else {
    out.seed = resolve_u64(nullptr, 0, cfg, "seed", 0);
  }

  const std::uint64_t reps =
      resolve_u64(c.replicas_opt, c.replicas, cfg, "replicas", 1);
  if (reps < 1 || reps > 0xFFFFFFFFull) {
    throw ConfigError("replicas must lie in [1, 2^32)");
  }
  out.replicas = static_cast<std::uint32_t>(reps);

  const std::uint64_t threads =
      resolve_u64(c.threads_opt, c.threads, cfg, "threads", 1);
  out.threads = static_cast<unsigned>(std::max<std::uint64_t>(1, threads));

  out.out = resolve_string(c.out_opt, c.out, cfg, "out", default_out);
  out.manifest = resolve_string(c.manifest_opt, c.manifest, cfg, "manifest",
                                out.out + ".manifest.json");
  out.allow_counterexample = resolve_bool(
      c.allow_opt, c.allow_counterexample, cfg, "allow_counterexample", false);
  return out;
}

MDist build_dist(const CommonOpts& co, const std::string& command) {
  const MDist dist = MDist::from_text(co.dist_text);
  const auto report = dist.validate();
  if (report.counterexample && !co.allow_counterexample) {
    throw ConfigError(
        "'" + co.dist_text + "' violates the nongeometric-tail assumption "
        "(" + report.detail + "); the " + command + " results would not be "
        "covered by the Gumbel-limit theory. Pass --allow-counterexample to "
        "run anyway");
  }
  if (!(co.q > 0.0) || !std::isfinite(co.q)) {
    throw ConfigError("q must be a positive real, got " + format_double(co.q));
  }
  return dist;
}

void write_manifest(const CommonOpts& co, const std::string& command,
                    const Json& options,
                    const std::vector<OutputFile>& outputs) {
  Json manifest;
  manifest["schema"] = "perp-manifest-v1";
  manifest["tool"] = "perp";
  manifest["version"] = kVersion;
  manifest["revision"] = kRevision;
  manifest["command"] = command;
  manifest["seed"] = co.seed;
  manifest["dist"] = co.dist_text;
  manifest["q"] = co.q;
  manifest["replicas"] = co.replicas;
  Json opts = options;
  opts["allow_counterexample"] = co.allow_counterexample;
  manifest["options"] = std::move(opts);
  Json outs = Json::array();
  for (const auto& f : outputs) {
    outs.push_back(Json{{"path", f.path}, {"bytes", f.bytes}});
  }
  manifest["outputs"] = outs;
  write_text_file(co.manifest, dump_json(manifest));
}

std::uint32_t to_u32_index(std::uint64_t i, const char* what) {
  if (i > 0xFFFFFFFFull) {
    throw ConfigError(std::string(what) +
                      " does not fit the 32-bit block column; lower n");
  }
  return static_cast<std::uint32_t>(i);
}

// ---- simulate ----

struct SimulateCli {
  std::string mode = "stationary";
  std::uint64_t n = 10000;
  std::uint64_t block_len = 1000;
  std::uint64_t n_blocks = 100;
  std::string format = "csv";
  std::string init = "stationary";
  double tolerance = 1e-12;
  std::uint64_t max_terms = 1000000;

  CLI::Option* mode_opt = nullptr;
  CLI::Option* n_opt = nullptr;
  CLI::Option* block_len_opt = nullptr;
  CLI::Option* n_blocks_opt = nullptr;
  CLI::Option* format_opt = nullptr;
  CLI::Option* init_opt = nullptr;
  CLI::Option* tolerance_opt = nullptr;
  CLI::Option* max_terms_opt = nullptr;
};

InitPolicy parse_init(const std::string& text, double tolerance,
                      std::uint64_t max_terms) {
  if (text == "stationary") return StationaryInit{tolerance, max_terms};
  if (text.rfind("fixed:", 0) == 0) {
    return FixedInit{parse_double(text.substr(6), "init fixed value")};
  }
  if (text.rfind("burnin:", 0) == 0) {
    return BurnInInit{parse_u64(text.substr(7), "init burn-in steps")};
  }
  throw ConfigError("init must be 'stationary', 'fixed:<r0>' or "
                    "'burnin:<steps>', got '" + text + "'");
}

void run_simulate(const CommonCli& common_cli, const SimulateCli& cli,
                  const Cfg& cfg) {
  const CommonOpts co = resolve_common(common_cli, cfg, "simulate.csv");
  const MDist dist = build_dist(co, "simulate");

  const std::string mode =
      resolve_string(cli.mode_opt, cli.mode, cfg, "mode", "stationary");
  const std::uint64_t n = resolve_u64(cli.n_opt, cli.n, cfg, "n", 10000);
  const std::uint64_t block_len =
      resolve_u64(cli.block_len_opt, cli.block_len, cfg, "block_len", 1000);
  const std::uint64_t n_blocks =
      resolve_u64(cli.n_blocks_opt, cli.n_blocks, cfg, "n_blocks", 100);
  const std::string format =
      resolve_string(cli.format_opt, cli.format, cfg, "format", "csv");
  const std::string init_text =
      resolve_string(cli.init_opt, cli.init, cfg, "init", "stationary");
  const double tolerance =
      resolve_double(cli.tolerance_opt, cli.tolerance, cfg, "tolerance", 1e-12);
  const std::uint64_t max_terms =
      resolve_u64(cli.max_terms_opt, cli.max_terms, cfg, "max_terms", 1000000);

  if (format != "csv" && format != "binary") {
    throw ConfigError("format must be 'csv' or 'binary', got '" + format +
                      "'");
  }
  if (mode != "stationary" && mode != "path" && mode != "blocks") {
    throw ConfigError("mode must be 'stationary', 'path' or 'blocks', got '" +
                      mode + "'");
  }
  const InitPolicy init = parse_init(init_text, tolerance, max_terms);

  RecurrenceConfig rc;
  rc.q = co.q;
  rc.n = std::max<std::uint64_t>(1, n);
  rc.replicas = co.replicas;
  rc.seed = co.seed;
  rc.init = init;
  rc.validate();

  std::vector<Record> rows;
  if (mode == "stationary") {
    const auto draws = ensemble(co.replicas, co.threads, [&](std::uint32_t r) {
      auto rng = replica_rng(co.seed, r, Stream::stationary_sample);
      std::vector<double> v;
      v.reserve(n);
      for (std::uint64_t i = 0; i < n; ++i) {
        v.push_back(
            sample_stationary(dist, co.q, tolerance, max_terms, rng).value);
      }
      return v;
    });
    rows.reserve(static_cast<std::size_t>(n) * co.replicas);
    for (std::uint32_t r = 0; r < co.replicas; ++r) {
      for (std::uint64_t i = 0; i < n; ++i) {
        rows.push_back({draws[r][i], r, to_u32_index(i, "sample index")});
      }
    }
  } else if (mode == "path") {
    const auto paths = ensemble(co.replicas, co.threads, [&](std::uint32_t r) {
      std::vector<double> v;
      v.reserve(n);
      simulate_path(rc, dist, r,
                    [&](std::uint64_t, double value) { v.push_back(value); });
      return v;
    });
    rows.reserve(static_cast<std::size_t>(n) * co.replicas);
    for (std::uint32_t r = 0; r < co.replicas; ++r) {
      for (std::uint64_t i = 0; i < n; ++i) {
        rows.push_back({paths[r][i], r, to_u32_index(i, "step index")});
      }
    }
  } else {
    const auto maxima = ensemble(co.replicas, co.threads, [&](std::uint32_t r) {
      return block_maxima(rc, dist, block_len, n_blocks, r);
    });
    rows.reserve(static_cast<std::size_t>(n_blocks) * co.replicas);
    for (std::uint32_t r = 0; r < co.replicas; ++r) {
      for (std::uint64_t b = 0; b < n_blocks; ++b) {
        rows.push_back({maxima[r][b], r, to_u32_index(b, "block index")});
      }
    }
  }

  std::ostringstream body;
  if (format == "csv") {
    write_csv(body, rows);
  } else {
    write_binary(body, rows);
  }
  const OutputFile out_file = write_text_file(co.out, body.str());

  Json options;
  options["mode"] = mode;
  if (mode == "blocks") {
    options["block_len"] = block_len;
    options["n_blocks"] = n_blocks;
  } else {
    options["n"] = n;
  }
  options["init"] = init_text;
  options["tolerance"] = tolerance;
  options["max_terms"] = max_terms;
  options["format"] = format;
  write_manifest(co, "simulate", options, {out_file});
}

// ---- maxima-gof ----

struct MaximaGofCli {
  std::vector<std::uint64_t> block_len = {1000};
  std::uint64_t n_blocks = 100;
  std::string theta_method = "theoretical";
  std::uint64_t run_gap = 20;
  double u_level = 0.0;  // 0 = per-block-length default 1 - 1/block_len
  std::vector<double> x_grid;
  std::uint64_t tail_capacity = 0;  // 0 = auto

  CLI::Option* block_len_opt = nullptr;
  CLI::Option* n_blocks_opt = nullptr;
  CLI::Option* theta_method_opt = nullptr;
  CLI::Option* run_gap_opt = nullptr;
  CLI::Option* u_level_opt = nullptr;
  CLI::Option* x_grid_opt = nullptr;
  CLI::Option* tail_capacity_opt = nullptr;
};

struct GofReplica {
  std::vector<std::vector<double>> maxima;  // one vector per block length
  TailReservoir res{1};
  bool init_truncated = false;
};

void run_maxima_gof(const CommonCli& common_cli, const MaximaGofCli& cli,
                    const Cfg& cfg) {
  const CommonOpts co = resolve_common(common_cli, cfg, "maxima-gof.json");
  const MDist dist = build_dist(co, "maxima-gof");

  const auto block_lens = resolve_u64_list(cli.block_len_opt, cli.block_len,
                                           cfg, "block_len", {1000});
  const std::uint64_t n_blocks =
      resolve_u64(cli.n_blocks_opt, cli.n_blocks, cfg, "n_blocks", 100);
  const std::string theta_method = resolve_string(
      cli.theta_method_opt, cli.theta_method, cfg, "theta_method",
      "theoretical");
  const std::uint64_t run_gap =
      resolve_u64(cli.run_gap_opt, cli.run_gap, cfg, "run_gap", 20);
  const double u_level =
      resolve_double(cli.u_level_opt, cli.u_level, cfg, "u_level", 0.0);
  const auto x_grid = resolve_double_list(cli.x_grid_opt, cli.x_grid, cfg,
                                          "x_grid", default_x_grid());
  std::uint64_t tail_capacity = resolve_u64(
      cli.tail_capacity_opt, cli.tail_capacity, cfg, "tail_capacity", 0);

  if (block_lens.empty()) throw ConfigError("block_len list is empty");
  if (theta_method != "theoretical" && theta_method != "blocks" &&
      theta_method != "runs") {
    throw ConfigError("theta_method must be 'theoretical', 'blocks' or "
                      "'runs', got '" + theta_method + "'");
  }
  if (n_blocks < 2) throw ConfigError("n_blocks must be >= 2");
  const std::uint64_t path_len = block_lens.front() * n_blocks;
  std::uint64_t bl_min = block_lens.front();
  for (const auto bl : block_lens) {
    if (bl < 2) throw ConfigError("block lengths must be >= 2");
    if (path_len / bl < 2) {
      throw ConfigError("block length " + std::to_string(bl) +
                        " leaves fewer than 2 blocks in a path of " +
                        std::to_string(path_len) + " steps");
    }
    bl_min = std::min(bl_min, bl);
  }

  if (tail_capacity == 0) {
    // Retain enough of each replica's upper tail to answer every fit
    // level 1 - e^{-x}/(theta * block_len) down to theta = 0.25, x = -1.
    const double frac = std::exp(1.0) / (0.25 * static_cast<double>(bl_min));
    const double total = static_cast<double>(path_len) * co.replicas;
    tail_capacity = static_cast<std::uint64_t>(
        std::min(static_cast<double>(path_len), std::ceil(total * frac) + 64));
  }

  RecurrenceConfig rc;
  rc.q = co.q;
  rc.n = path_len;
  rc.replicas = co.replicas;
  rc.seed = co.seed;
  rc.init = StationaryInit{};
  rc.validate();

  const auto replicas_data =
      ensemble(co.replicas, co.threads, [&](std::uint32_t r) {
        GofReplica out;
        out.res = TailReservoir(static_cast<std::size_t>(tail_capacity));
        struct Tracker {
          std::uint64_t bl;
          std::uint64_t want;
          double cur = -1.0;
          std::vector<double> maxima;
        };
        std::vector<Tracker> trackers;
        trackers.reserve(block_lens.size());
        for (const auto bl : block_lens) {
          Tracker t;
          t.bl = bl;
          t.want = path_len / bl;
          t.maxima.reserve(t.want);
          trackers.push_back(std::move(t));
        }
        const auto summary =
            simulate_path(rc, dist, r, [&](std::uint64_t k, double v) {
              out.res.observe(k, v);
              for (auto& t : trackers) {
                if (t.maxima.size() >= t.want) continue;
                if (v > t.cur) t.cur = v;
                if (k % t.bl == 0) {
                  t.maxima.push_back(t.cur);
                  t.cur = -1.0;
                }
              }
            });
        out.init_truncated = summary.init_truncated;
        for (auto& t : trackers) out.maxima.push_back(std::move(t.maxima));
        return out;
      });

  std::vector<const TailReservoir*> parts;
  for (const auto& rep : replicas_data) parts.push_back(&rep.res);
  const PooledTail pooled = pool_tails(parts);

  Json results = Json::array();
  for (std::size_t i = 0; i < block_lens.size(); ++i) {
    const std::uint64_t bl = block_lens[i];
    std::vector<double> maxima;
    for (const auto& rep : replicas_data) {
      maxima.insert(maxima.end(), rep.maxima[i].begin(), rep.maxima[i].end());
    }

    ExtremalIndexEstimate est;
    if (theta_method == "theoretical") {
      est.theta_hat = theta_theoretical(dist);
      est.method = ThetaMethod::theoretical;
    } else {
      const double level =
          u_level > 0.0 ? u_level : 1.0 - 1.0 / static_cast<double>(bl);
      const double u_star = pooled.quantile(level);
      ClusterCounts total;
      for (const auto& rep : replicas_data) {
        const auto recs = exceedances(rep.res, u_star);
        const auto c = theta_method == "blocks"
                           ? count_block_clusters(recs, bl)
                           : count_run_clusters(recs, run_gap);
        total.clusters += c.clusters;
        total.exceedances += c.exceedances;
      }
      est = ratio_estimate(total,
                           theta_method == "blocks" ? ThetaMethod::blocks
                                                    : ThetaMethod::runs,
                           u_star,
                           theta_method == "blocks"
                               ? static_cast<double>(bl)
                               : static_cast<double>(run_gap));
    }

    const NormingPair norming = empirical_norming(
        pooled, static_cast<double>(bl), est.theta_hat, x_grid);
    const double ks = ks_gumbel(maxima, norming);

    Json entry;
    entry["block_len"] = bl;
    entry["n_blocks"] = maxima.size();
    entry["theta_used"] = est.theta_hat;
    entry["theta_estimate"] = parse_embedded(to_json(est));
    entry["norming"] = parse_embedded(to_json(norming));
    entry["ks"] = ks;
    results.push_back(std::move(entry));
  }

  Json options;
  options["block_len"] = block_lens;
  options["n_blocks"] = n_blocks;
  options["path_length"] = path_len;
  options["theta_method"] = theta_method;
  options["run_gap"] = run_gap;
  if (u_level > 0.0) {
    options["u_level"] = u_level;
  } else {
    options["u_level"] = nullptr;  // per-block-length 1 - 1/block_len
  }
  options["x_grid"] = x_grid;
  options["tail_capacity"] = tail_capacity;

  Json report;
  report["command"] = "maxima-gof";
  report["dist"] = co.dist_text;
  report["q"] = co.q;
  report["seed"] = co.seed;
  report["replicas"] = co.replicas;
  report["options"] = options;
  report["results"] = std::move(results);

  const OutputFile out_file = write_text_file(co.out, dump_json(report));
  write_manifest(co, "maxima-gof", options, {out_file});
}

// ---- norming ----

struct NormingCli {
  double log_n = 100.0;
  double c0 = 1.0, c1 = 1.0, c2 = 1.0, c3 = 1.0;
  std::uint64_t empirical_size = 0;
  std::vector<double> x_grid;

  CLI::Option* log_n_opt = nullptr;
  CLI::Option* c0_opt = nullptr;
  CLI::Option* c1_opt = nullptr;
  CLI::Option* c2_opt = nullptr;
  CLI::Option* c3_opt = nullptr;
  CLI::Option* empirical_size_opt = nullptr;
  CLI::Option* x_grid_opt = nullptr;
};

void run_norming(const CommonCli& common_cli, const NormingCli& cli,
                 const Cfg& cfg) {
  const CommonOpts co = resolve_common(common_cli, cfg, "norming.json");
  const MDist dist = build_dist(co, "norming");

  const double log_n =
      resolve_double(cli.log_n_opt, cli.log_n, cfg, "log_n", 100.0);
  TailConstants constants;
  constants.c0 = resolve_double(cli.c0_opt, cli.c0, cfg, "c0", 1.0);
  constants.c1 = resolve_double(cli.c1_opt, cli.c1, cfg, "c1", 1.0);
  constants.c2 = resolve_double(cli.c2_opt, cli.c2, cfg, "c2", 1.0);
  constants.c3 = resolve_double(cli.c3_opt, cli.c3, cfg, "c3", 1.0);
  const std::uint64_t empirical_size = resolve_u64(
      cli.empirical_size_opt, cli.empirical_size, cfg, "empirical_size", 0);
  const auto x_grid = resolve_double_list(cli.x_grid_opt, cli.x_grid, cfg,
                                          "x_grid", default_x_grid());
  constants.validate();

  Json variants;
  const auto put = [&](const char* name, auto&& make) {
    try {
      variants[name] = parse_embedded(to_json(make()));
    } catch (const Error& e) {
      variants[name] = nullptr;
      variants[std::string(name) + "_reason"] = e.what();
    }
  };
  put("solved-lower",
      [&] { return solved_norming(dist, constants, log_n, Bound::lower); });
  put("solved-upper",
      [&] { return solved_norming(dist, constants, log_n, Bound::upper); });
  put("asymptotic",
      [&] { return asymptotic_norming(dist, constants, log_n); });

  if (empirical_size == 0) {
    variants["empirical"] = nullptr;
    variants["empirical_reason"] =
        "not requested; pass --empirical-size to simulate a fit sample";
  } else {
    put("empirical", [&] {
      const double n = std::exp(log_n);
      if (!std::isfinite(n)) {
        throw CapabilityError("n = exp(" + format_double(log_n) +
                              ") overflows; the empirical fit needs a "
                              "sample of >= 100 * theta * n values");
      }
      const std::uint64_t per =
          (empirical_size + co.replicas - 1) / co.replicas;
      const auto draws =
          ensemble(co.replicas, co.threads, [&](std::uint32_t r) {
            auto rng = replica_rng(co.seed, r, Stream::stationary_sample);
            std::vector<double> v;
            v.reserve(per);
            for (std::uint64_t i = 0; i < per; ++i) {
              v.push_back(
                  sample_stationary(dist, co.q, 1e-12, 1000000, rng).value);
            }
            return v;
          });
      std::vector<double> sample;
      sample.reserve(per * co.replicas);
      for (const auto& v : draws) {
        sample.insert(sample.end(), v.begin(), v.end());
      }
      std::sort(sample.begin(), sample.end());
      return empirical_norming(sample, n, theta_theoretical(dist), x_grid);
    });
  }

  Json options;
  options["log_n"] = log_n;
  options["constants"] = Json{{"c0", constants.c0},
                              {"c1", constants.c1},
                              {"c2", constants.c2},
                              {"c3", constants.c3}};
  options["empirical_size"] = empirical_size;
  options["x_grid"] = x_grid;

  Json report;
  report["command"] = "norming";
  report["dist"] = co.dist_text;
  report["q"] = co.q;
  report["seed"] = co.seed;
  report["options"] = options;
  report["variants"] = std::move(variants);

  const OutputFile out_file = write_text_file(co.out, dump_json(report));
  write_manifest(co, "norming", options, {out_file});
}

// ---- extremal-index ----

struct ExtremalIndexCli {
  std::uint64_t n = 100000;
  double u_level = 0.995;
  double u = 0.0;
  std::uint64_t block_len = 50;
  std::uint64_t run_gap = 20;
  std::uint64_t conditional_samples = 100;
  std::uint64_t attempt_cap = 100000000;
  std::uint64_t tail_capacity = 0;

  CLI::Option* n_opt = nullptr;
  CLI::Option* u_level_opt = nullptr;
  CLI::Option* u_opt = nullptr;
  CLI::Option* block_len_opt = nullptr;
  CLI::Option* run_gap_opt = nullptr;
  CLI::Option* conditional_samples_opt = nullptr;
  CLI::Option* attempt_cap_opt = nullptr;
  CLI::Option* tail_capacity_opt = nullptr;
};

void run_extremal_index(const CommonCli& common_cli,
                        const ExtremalIndexCli& cli, const Cfg& cfg) {
  const CommonOpts co = resolve_common(common_cli, cfg, "extremal-index.json");
  const MDist dist = build_dist(co, "extremal-index");

  const std::uint64_t n = resolve_u64(cli.n_opt, cli.n, cfg, "n", 100000);
  const double u_level =
      resolve_double(cli.u_level_opt, cli.u_level, cfg, "u_level", 0.995);
  const bool u_given = flag_given(cli.u_opt) || cfg.lookup("u").has_value();
  const double u_flag = resolve_double(cli.u_opt, cli.u, cfg, "u", 0.0);
  const std::uint64_t block_len =
      resolve_u64(cli.block_len_opt, cli.block_len, cfg, "block_len", 50);
  const std::uint64_t run_gap =
      resolve_u64(cli.run_gap_opt, cli.run_gap, cfg, "run_gap", 20);
  const std::uint64_t conditional_samples =
      resolve_u64(cli.conditional_samples_opt, cli.conditional_samples, cfg,
                  "conditional_samples", 100);
  const std::uint64_t attempt_cap = resolve_u64(
      cli.attempt_cap_opt, cli.attempt_cap, cfg, "attempt_cap", 100000000);
  std::uint64_t tail_capacity = resolve_u64(
      cli.tail_capacity_opt, cli.tail_capacity, cfg, "tail_capacity", 0);

  if (!u_given && !(u_level > 0.0 && u_level < 1.0)) {
    throw ConfigError("u_level must lie in (0, 1)");
  }
  if (tail_capacity == 0) {
    const double spare =
        u_given ? static_cast<double>(n) / 16.0
                : 8.0 * static_cast<double>(n) * (1.0 - u_level);
    tail_capacity = static_cast<std::uint64_t>(std::min(
        static_cast<double>(n), std::max(65536.0, std::ceil(spare))));
  }

  RecurrenceConfig rc;
  rc.q = co.q;
  rc.n = n;
  rc.replicas = co.replicas;
  rc.seed = co.seed;
  rc.init = StationaryInit{};
  rc.validate();

  const auto reservoirs =
      ensemble(co.replicas, co.threads, [&](std::uint32_t r) {
        struct Slot {
          TailReservoir res{1};
        };
        Slot out;
        out.res = TailReservoir(static_cast<std::size_t>(tail_capacity));
        simulate_path(rc, dist, r, [&](std::uint64_t k, double v) {
          out.res.observe(k, v);
        });
        return out;
      });

  std::vector<const TailReservoir*> parts;
  for (const auto& slot : reservoirs) parts.push_back(&slot.res);
  const PooledTail pooled = pool_tails(parts);
  const double u = u_given ? u_flag : pooled.quantile(u_level);

  Json report;
  report["command"] = "extremal-index";
  report["dist"] = co.dist_text;
  report["q"] = co.q;
  report["seed"] = co.seed;
  report["replicas"] = co.replicas;
  report["n"] = n;
  report["u"] = u;
  if (u_given) {
    report["u_level"] = nullptr;
  } else {
    report["u_level"] = u_level;
  }

  {
    ExtremalIndexEstimate est;
    est.theta_hat = theta_theoretical(dist);
    est.method = ThetaMethod::theoretical;
    report["theoretical"] = parse_embedded(to_json(est));
  }

  const auto pooled_counts = [&](auto&& counter) {
    ClusterCounts total;
    for (const auto& slot : reservoirs) {
      const auto recs = exceedances(slot.res, u);
      const auto c = counter(recs);
      total.clusters += c.clusters;
      total.exceedances += c.exceedances;
    }
    return total;
  };
  const auto put = [&](const char* name, auto&& make) {
    try {
      report[name] = parse_embedded(to_json(make()));
    } catch (const Error& e) {
      report[name] = nullptr;
      report[std::string(name) + "_reason"] = e.what();
    }
  };
  put("blocks", [&] {
    return ratio_estimate(
        pooled_counts([&](const ExceedanceRecords& recs) {
          return count_block_clusters(recs, block_len);
        }),
        ThetaMethod::blocks, u, static_cast<double>(block_len));
  });
  put("runs", [&] {
    return ratio_estimate(
        pooled_counts([&](const ExceedanceRecords& recs) {
          return count_run_clusters(recs, run_gap);
        }),
        ThetaMethod::runs, u, static_cast<double>(run_gap));
  });
  if (conditional_samples == 0) {
    report["conditional"] = nullptr;
    report["conditional_reason"] = "not requested; pass --conditional-samples";
  } else {
    put("conditional", [&] {
      auto rng = replica_rng(co.seed, 0, Stream::conditional);
      return conditional_non_exceedance(dist, co.q, u, conditional_samples,
                                        rng, attempt_cap);
    });
  }

  Json options;
  options["n"] = n;
  if (u_given) {
    options["u"] = u;
  } else {
    options["u_level"] = u_level;
  }
  options["block_len"] = block_len;
  options["run_gap"] = run_gap;
  options["conditional_samples"] = conditional_samples;
  options["attempt_cap"] = attempt_cap;
  options["tail_capacity"] = tail_capacity;

  const OutputFile out_file = write_text_file(co.out, dump_json(report));
  write_manifest(co, "extremal-index", options, {out_file});
}

// ---- tailcheck ----

struct TailcheckCli {
  std::uint64_t n = 100000;
  std::uint64_t y_points = 12;
  std::vector<double> c_grid = {0.25, 0.5, 1.0, 2.0, 4.0};

  CLI::Option* n_opt = nullptr;
  CLI::Option* y_points_opt = nullptr;
  CLI::Option* c_grid_opt = nullptr;
};

void run_tailcheck(const CommonCli& common_cli, const TailcheckCli& cli,
                   const Cfg& cfg) {
  const CommonOpts co = resolve_common(common_cli, cfg, "tailcheck.json");
  const MDist dist = build_dist(co, "tailcheck");

  const std::uint64_t n = resolve_u64(cli.n_opt, cli.n, cfg, "n", 100000);
  const std::uint64_t y_points =
      resolve_u64(cli.y_points_opt, cli.y_points, cfg, "y_points", 12);
  const auto c_grid = resolve_double_list(cli.c_grid_opt, cli.c_grid, cfg,
                                          "c_grid", {0.25, 0.5, 1.0, 2.0, 4.0});
  if (y_points < 2) throw ConfigError("y_points must be >= 2");
  if (c_grid.empty()) throw ConfigError("c_grid is empty");

  const std::uint64_t per = (n + co.replicas - 1) / co.replicas;
  const auto draws = ensemble(co.replicas, co.threads, [&](std::uint32_t r) {
    auto rng = replica_rng(co.seed, r, Stream::stationary_sample);
    std::vector<double> v;
    v.reserve(per);
    for (std::uint64_t i = 0; i < per; ++i) {
      v.push_back(sample_stationary(dist, co.q, 1e-12, 1000000, rng).value);
    }
    return v;
  });
  std::vector<double> sample;
  sample.reserve(per * co.replicas);
  for (const auto& v : draws) sample.insert(sample.end(), v.begin(), v.end());
  const EcdfView view(std::move(sample));

  const double y_lo = view.quantile(0.90);
  const double y_hi = view.quantile(0.9999);
  std::vector<double> y_grid;
  y_grid.reserve(y_points);
  for (std::uint64_t i = 0; i < y_points; ++i) {
    const double t =
        static_cast<double>(i) / static_cast<double>(y_points - 1);
    y_grid.push_back(y_lo + t * (y_hi - y_lo));
  }

  std::vector<std::pair<double, double>> pairs;
  pairs.reserve(c_grid.size() * c_grid.size());
  for (const double c : c_grid) {
    for (const double cp : c_grid) pairs.emplace_back(c, cp);
  }

  const SandwichReport sandwich = tail_sandwich(view, dist, y_grid, pairs);

  Json options;
  options["n"] = per * co.replicas;
  options["y_points"] = y_points;
  options["c_grid"] = c_grid;

  Json report;
  report["command"] = "tailcheck";
  report["dist"] = co.dist_text;
  report["q"] = co.q;
  report["seed"] = co.seed;
  report["replicas"] = co.replicas;
  report["options"] = options;
  report["sandwich"] = parse_embedded(to_json(sandwich));

  const OutputFile out_file = write_text_file(co.out, dump_json(report));
  write_manifest(co, "tailcheck", options, {out_file});
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Monte Carlo toolkit for the recurrence R_k = M_k R_{k-1} + q: "
      "stationary sampling, block maxima, norming constants, extremal "
      "index estimation, tail bounds"};
  app.require_subcommand(1);

  CommonCli common_sim, common_gof, common_norm, common_ext, common_tail;
  SimulateCli sim;
  MaximaGofCli gof;
  NormingCli norm;
  ExtremalIndexCli ext;
  TailcheckCli tail;

  CLI::App* sub_sim = app.add_subcommand(
      "simulate", "Write stationary samples, a raw path, or block maxima");
  add_common(sub_sim, common_sim);
  sim.mode_opt = sub_sim->add_option(
      "--mode", sim.mode, "stationary | path | blocks");
  sim.n_opt = sub_sim->add_option(
      "--n", sim.n, "Samples (or path steps) per replica");
  sim.block_len_opt =
      sub_sim->add_option("--block-len", sim.block_len, "Block length");
  sim.n_blocks_opt =
      sub_sim->add_option("--n-blocks", sim.n_blocks, "Blocks per replica");
  sim.format_opt =
      sub_sim->add_option("--format", sim.format, "csv | binary");
  sim.init_opt = sub_sim->add_option(
      "--init", sim.init, "stationary | fixed:<r0> | burnin:<steps>");
  sim.tolerance_opt = sub_sim->add_option(
      "--tolerance", sim.tolerance, "Stationary series truncation tolerance");
  sim.max_terms_opt = sub_sim->add_option(
      "--max-terms", sim.max_terms, "Stationary series term cap");

  CLI::App* sub_gof = app.add_subcommand(
      "maxima-gof",
      "Block maxima, empirical norming, and the KS distance to the "
      "Gumbel law exp(-e^{-x})");
  add_common(sub_gof, common_gof);
  gof.block_len_opt =
      sub_gof->add_option("--block-len", gof.block_len,
                          "Block lengths (comma separated); the first one "
                          "times --n-blocks fixes the path length")
          ->delimiter(',');
  gof.n_blocks_opt =
      sub_gof->add_option("--n-blocks", gof.n_blocks,
                          "Blocks at the first block length");
  gof.theta_method_opt = sub_gof->add_option(
      "--theta-method", gof.theta_method, "theoretical | blocks | runs");
  gof.run_gap_opt = sub_gof->add_option(
      "--run-gap", gof.run_gap, "Gap for the runs estimator");
  gof.u_level_opt = sub_gof->add_option(
      "--u-level", gof.u_level,
      "Estimator threshold level (default per block length: 1 - 1/len)");
  gof.x_grid_opt = sub_gof->add_option("--x-grid", gof.x_grid,
                                       "Abscissas for the norming fit")
                       ->delimiter(',');
  gof.tail_capacity_opt = sub_gof->add_option(
      "--tail-capacity", gof.tail_capacity,
      "Per-replica retained tail values (0 = auto)");

  CLI::App* sub_norm = app.add_subcommand(
      "norming", "Solved, asymptotic, and empirical norming pairs (a, b)");
  add_common(sub_norm, common_norm);
  norm.log_n_opt =
      sub_norm->add_option("--log-n", norm.log_n, "ln n for the norming pair");
  norm.c0_opt = sub_norm->add_option("--c0", norm.c0, "Lower-bound multiplier");
  norm.c1_opt = sub_norm->add_option("--c1", norm.c1, "Lower-bound divisor");
  norm.c2_opt = sub_norm->add_option("--c2", norm.c2, "Upper-bound multiplier");
  norm.c3_opt = sub_norm->add_option("--c3", norm.c3, "Upper-bound divisor");
  norm.empirical_size_opt = sub_norm->add_option(
      "--empirical-size", norm.empirical_size,
      "Stationary sample size for the empirical fit (0 = skip)");
  norm.x_grid_opt = sub_norm->add_option("--x-grid", norm.x_grid,
                                         "Abscissas for the empirical fit")
                        ->delimiter(',');

  CLI::App* sub_ext = app.add_subcommand(
      "extremal-index",
      "Theoretical, blocks, runs, and conditional extremal-index estimates");
  add_common(sub_ext, common_ext);
  ext.n_opt = sub_ext->add_option("--n", ext.n, "Path length per replica");
  ext.u_level_opt = sub_ext->add_option(
      "--u-level", ext.u_level, "Threshold as a quantile level of the path");
  ext.u_opt = sub_ext->add_option(
      "--u", ext.u, "Absolute threshold (overrides --u-level)");
  ext.block_len_opt = sub_ext->add_option(
      "--block-len", ext.block_len, "Block length for the blocks estimator");
  ext.run_gap_opt = sub_ext->add_option(
      "--run-gap", ext.run_gap, "Gap for the runs estimator");
  ext.conditional_samples_opt = sub_ext->add_option(
      "--conditional-samples", ext.conditional_samples,
      "Conditioned pairs for the conditional estimate (0 = skip)");
  ext.attempt_cap_opt = sub_ext->add_option(
      "--attempt-cap", ext.attempt_cap,
      "Stationary draws allowed while conditioning on R > u");
  ext.tail_capacity_opt = sub_ext->add_option(
      "--tail-capacity", ext.tail_capacity,
      "Per-replica retained tail values (0 = auto)");

  CLI::App* sub_tail = app.add_subcommand(
      "tailcheck", "Feasible constants for the stationary tail sandwich");
  add_common(sub_tail, common_tail);
  tail.n_opt =
      sub_tail->add_option("--n", tail.n, "Total stationary sample size");
  tail.y_points_opt = sub_tail->add_option(
      "--y-points", tail.y_points,
      "Grid points on [90th, 99.99th percentile]");
  tail.c_grid_opt = sub_tail->add_option(
      "--c-grid", tail.c_grid,
      "Candidate constants; all ordered pairs are tested")
                        ->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    const auto run = [&](CLI::App* sub, const CommonCli& common, auto&& fn) {
      Cfg cfg;
      cfg.section = sub->get_name();
      if (!common.config_path.empty()) {
        std::ifstream is(common.config_path);
        if (!is) {
          throw ConfigError("cannot open config file '" + common.config_path +
                            "'");
        }
        cfg.kv = parse_config(is);
      }
      fn(cfg);
    };
    if (sub_sim->parsed()) {
      run(sub_sim, common_sim,
          [&](const Cfg& cfg) { run_simulate(common_sim, sim, cfg); });
    } else if (sub_gof->parsed()) {
      run(sub_gof, common_gof,
          [&](const Cfg& cfg) { run_maxima_gof(common_gof, gof, cfg); });
    } else if (sub_norm->parsed()) {
      run(sub_norm, common_norm,
          [&](const Cfg& cfg) { run_norming(common_norm, norm, cfg); });
    } else if (sub_ext->parsed()) {
      run(sub_ext, common_ext,
          [&](const Cfg& cfg) { run_extremal_index(common_ext, ext, cfg); });
    } else if (sub_tail->parsed()) {
      run(sub_tail, common_tail,
          [&](const Cfg& cfg) { run_tailcheck(common_tail, tail, cfg); });
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
