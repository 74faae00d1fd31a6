#include "perp/gof.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <nlohmann/json.hpp>

#include "perp/error.hpp"
#include "perp/io.hpp"
#include "perp/recurrence.hpp"

namespace perp {

EcdfView::EcdfView(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw ConfigError("EcdfView: empty sample");
  if (!std::is_sorted(values_.begin(), values_.end())) {
    std::sort(values_.begin(), values_.end());
  }
}

double EcdfView::quantile(double level) const {
  if (!(level > 0.0 && level <= 1.0)) {
    throw ConfigError("EcdfView: quantile level must lie in (0, 1]");
  }
  const double raw = std::ceil(level * static_cast<double>(values_.size()));
  const auto rank = static_cast<std::size_t>(std::max(1.0, raw));
  return values_[std::min(rank, values_.size()) - 1];
}

double EcdfView::level_of(double x) const {
  const auto it = std::upper_bound(values_.begin(), values_.end(), x);
  return static_cast<double>(it - values_.begin()) /
         static_cast<double>(values_.size());
}

double EcdfView::tail(double y) const { return 1.0 - level_of(y); }

void EcdfView::to_csv(std::ostream& os) const {
  os << "value,level\n";
  const double n = static_cast<double>(values_.size());
  for (std::size_t i = 0; i < values_.size(); ++i) {
    os << format_double_17(values_[i]) << ','
       << format_double_17(static_cast<double>(i + 1) / n) << '\n';
  }
}

double ks_gumbel(const std::vector<double>& sample,
                 const NormingPair& norming) {
  if (sample.empty()) throw ConfigError("ks_gumbel: empty sample");
  std::vector<double> z;
  z.reserve(sample.size());
  for (const double v : sample) z.push_back(norming.a * (v - norming.b));
  std::sort(z.begin(), z.end());
  const double n = static_cast<double>(z.size());
  double d = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double g = gumbel_cdf(z[i]);
    const double above = static_cast<double>(i + 1) / n - g;
    const double below = g - static_cast<double>(i) / n;
    d = std::max(d, std::max(above, below));
  }
  return d;
}

namespace {

// ln p(delta) with the boundary convention of the sandwich bounds: for
// delta >= 1 the mass P(1 - delta < M <= 1) is everything, so ln p = 0.
double clamped_log_p(const MDist& spec, double delta) {
  if (delta >= 1.0) return 0.0;
  return spec.log_p_delta(delta);
}

}  // namespace

std::string to_json(const SandwichReport& report) {
  nlohmann::ordered_json j;
  j["y_grid"] = report.y_grid;
  j["neg_log_tail"] = report.neg_log_tail;
  auto pairs = [](const std::vector<std::pair<double, double>>& v) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& [c, cp] : v) arr.push_back({c, cp});
    return arr;
  };
  j["lower_feasible"] = pairs(report.lower_feasible);
  j["upper_feasible"] = pairs(report.upper_feasible);
  j["feasible"] = report.feasible;
  j["dropped_y"] = report.dropped_y;
  if (!report.warning.empty()) j["warning"] = report.warning;
  return j.dump();
}

SandwichReport tail_sandwich(
    const EcdfView& sample, const MDist& spec, std::vector<double> y_grid,
    const std::vector<std::pair<double, double>>& constant_grid) {
  if (y_grid.empty()) throw ConfigError("tail_sandwich: empty y grid");
  if (!std::is_sorted(y_grid.begin(), y_grid.end())) {
    throw ConfigError("tail_sandwich: y grid must be ascending");
  }
  if (constant_grid.empty()) {
    throw ConfigError("tail_sandwich: empty constant grid");
  }
  const double y_lo = sample.quantile(0.90);
  const double y_hi = sample.quantile(0.9999);
  if (y_grid.front() < y_lo || y_grid.back() > y_hi) {
    throw ConfigError(
        "tail_sandwich: y grid must lie within the sample's [90th, 99.99th] "
        "percentile range [" + format_double(y_lo) + ", " +
        format_double(y_hi) + "]");
  }

  SandwichReport rep;
  for (const double y : y_grid) {
    const double t = sample.tail(y);
    if (t <= 0.0) {
      ++rep.dropped_y;
      continue;
    }
    rep.y_grid.push_back(y);
    rep.neg_log_tail.push_back(-std::log(t));
  }
  if (rep.dropped_y > 0) {
    rep.warning = std::to_string(rep.dropped_y) +
                  " grid point(s) dropped: empirical tail is zero there";
  }
  if (rep.y_grid.empty()) {
    throw EstimationError("tail_sandwich: empirical tail vanishes on the "
                          "whole y grid; enlarge the sample");
  }

  for (const auto& [c, cp] : constant_grid) {
    if (!(c > 0.0 && cp > 0.0)) {
      throw ConfigError("tail_sandwich: constants must be positive");
    }
    bool lower_ok = true;
    bool upper_ok = true;
    for (std::size_t i = 0; i < rep.y_grid.size(); ++i) {
      const double y = rep.y_grid[i];
      const double log_tail = -rep.neg_log_tail[i];
      const double bound = c * y * clamped_log_p(spec, cp / y);
      if (!(bound <= log_tail)) lower_ok = false;
      if (!(bound >= log_tail)) upper_ok = false;
      if (!lower_ok && !upper_ok) break;
    }
    if (lower_ok) rep.lower_feasible.emplace_back(c, cp);
    if (upper_ok) rep.upper_feasible.emplace_back(c, cp);
  }
  rep.feasible = !rep.lower_feasible.empty() && !rep.upper_feasible.empty();
  return rep;
}

MomentOracle moment_oracle(const MDist& spec, double q) {
  if (!(q > 0.0) || !std::isfinite(q)) {
    throw ConfigError("moment_oracle: q must be a positive real");
  }
  const double em = spec.mean();
  const double em2 = spec.second_moment();
  if (!(em < 1.0 && em2 < 1.0)) {
    throw ConfigError("moment_oracle: needs EM < 1 and EM^2 < 1");
  }
  MomentOracle out;
  out.er = q / (1.0 - em);
  out.er2 = (q * q + 2.0 * q * em * out.er) / (1.0 - em2);
  return out;
}

double geometric_check(double p, double q, std::uint64_t n_samples,
                       std::uint64_t k_max, Philox4x64& rng) {
  if (n_samples < 1) throw ConfigError("geometric_check: n_samples >= 1");
  const MDist spec = MDist::twopoint(p);
  // Exceedance counts per integer level: R > k q  <=>  at least k leading
  // ones in the multiplier stream.
  std::vector<std::uint64_t> above(k_max + 1, 0);
  for (std::uint64_t s = 0; s < n_samples; ++s) {
    const auto draw = sample_stationary(spec, q, 1e-12, 1000000, rng);
    for (std::uint64_t k = 0; k <= k_max; ++k) {
      if (draw.value > static_cast<double>(k) * q) {
        ++above[k];
      } else {
        break;
      }
    }
  }
  double dev = 0.0;
  for (std::uint64_t k = 0; k <= k_max; ++k) {
    const double emp = static_cast<double>(above[k]) /
                       static_cast<double>(n_samples);
    const double exact = std::pow(p, static_cast<double>(k));
    dev = std::max(dev, std::abs(emp - exact));
  }
  return dev;
}

}  // namespace perp
