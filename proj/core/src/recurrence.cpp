#include "perp/recurrence.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace perp {

void RecurrenceConfig::validate() const {
  if (!(q > 0.0) || !std::isfinite(q)) {
    throw ConfigError("recurrence: q must be a positive real");
  }
  if (n < 1) throw ConfigError("recurrence: n must be >= 1");
  if (replicas < 1) throw ConfigError("recurrence: replicas must be >= 1");
  if (const auto* st = std::get_if<StationaryInit>(&init)) {
    if (!(st->tolerance > 0.0 && st->tolerance < 1.0)) {
      throw ConfigError("recurrence: stationary tolerance must lie in (0,1)");
    }
    if (st->max_terms < 1) {
      throw ConfigError("recurrence: max_terms must be >= 1");
    }
  }
  if (const auto* fixed = std::get_if<FixedInit>(&init)) {
    if (!(fixed->r0 >= 0.0) || !std::isfinite(fixed->r0)) {
      throw ConfigError("recurrence: fixed r0 must be a nonnegative real");
    }
  }
}

TailReservoir::TailReservoir(std::size_t capacity) : capacity_(capacity) {
  if (capacity < 1) throw ConfigError("TailReservoir: capacity must be >= 1");
  heap_.reserve(capacity);
}

namespace {
// Min-heap on value: the root is the smallest retained entry.
constexpr auto heap_cmp = [](const TailReservoir::Entry& a,
                             const TailReservoir::Entry& b) {
  return a.value > b.value;
};
}  // namespace

void TailReservoir::observe(std::uint64_t index, double value) {
  ++n_observed_;
  if (sorted_) {
    // A query interleaved with streaming: restore the heap property.
    std::make_heap(heap_.begin(), heap_.end(), heap_cmp);
    sorted_ = false;
  }
  if (heap_.size() < capacity_) {
    heap_.push_back({value, index});
    std::push_heap(heap_.begin(), heap_.end(), heap_cmp);
    return;
  }
  if (value <= heap_.front().value) return;
  std::pop_heap(heap_.begin(), heap_.end(), heap_cmp);
  heap_.back() = {value, index};
  std::push_heap(heap_.begin(), heap_.end(), heap_cmp);
}

double TailReservoir::min_retained() const {
  if (heap_.empty()) throw EstimationError("TailReservoir: nothing retained");
  if (sorted_) return heap_.back().value;
  return heap_.front().value;
}

void TailReservoir::ensure_sorted() const {
  if (sorted_) return;
  std::sort(heap_.begin(), heap_.end(), [](const Entry& a, const Entry& b) {
    if (a.value != b.value) return a.value > b.value;
    return a.index < b.index;
  });
  sorted_ = true;
}

double TailReservoir::quantile(double level) const {
  if (!(level > 0.0 && level <= 1.0)) {
    throw ConfigError("TailReservoir: quantile level must lie in (0,1]");
  }
  if (n_observed_ == 0) {
    throw EstimationError("TailReservoir: no observations");
  }
  const double raw = std::ceil(level * static_cast<double>(n_observed_));
  const std::uint64_t rank = std::max<std::uint64_t>(
      1, static_cast<std::uint64_t>(raw));  // 1-based from the bottom
  const std::uint64_t from_top = n_observed_ - rank + 1;
  if (from_top > heap_.size()) {
    throw EstimationError(
        "TailReservoir: level " + std::to_string(level) + " needs the " +
        std::to_string(from_top) + " largest values but only " +
        std::to_string(heap_.size()) + " are retained; raise the capacity");
  }
  ensure_sorted();
  return heap_[from_top - 1].value;
}

std::vector<std::uint64_t> TailReservoir::exceedance_indices(double u) const {
  // Values strictly above u are complete iff u is at or above the smallest
  // retained value, or nothing was ever evicted.
  if (n_observed_ > heap_.size() && !(u >= min_retained())) {
    throw EstimationError(
        "TailReservoir: exceedances of " + std::to_string(u) +
        " may have been evicted (smallest retained value is " +
        std::to_string(min_retained()) + "); raise the capacity");
  }
  std::vector<std::uint64_t> idx;
  for (const auto& e : heap_) {
    if (e.value > u) idx.push_back(e.index);
  }
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<double> TailReservoir::sorted_values_desc() const {
  ensure_sorted();
  std::vector<double> v;
  v.reserve(heap_.size());
  for (const auto& e : heap_) v.push_back(e.value);
  return v;
}

double PooledTail::quantile(double level) const {
  if (!(level > 0.0 && level <= 1.0)) {
    throw ConfigError("PooledTail: quantile level must lie in (0,1]");
  }
  if (n_observed == 0) throw EstimationError("PooledTail: no observations");
  const double raw = std::ceil(level * static_cast<double>(n_observed));
  const std::uint64_t rank =
      std::max<std::uint64_t>(1, static_cast<std::uint64_t>(raw));
  const std::uint64_t from_top = n_observed - rank + 1;
  if (from_top > values_desc.size()) {
    throw EstimationError(
        "PooledTail: level " + std::to_string(level) + " needs the " +
        std::to_string(from_top) + " largest values but only " +
        std::to_string(values_desc.size()) + " are retained");
  }
  const double v = values_desc[from_top - 1];
  if (v < floor) {
    throw EstimationError(
        "PooledTail: level " + std::to_string(level) +
        " falls below the exact pooled window (value " + std::to_string(v) +
        " < floor " + std::to_string(floor) + "); raise the capacity");
  }
  return v;
}

PooledTail pool_tails(const std::vector<const TailReservoir*>& parts) {
  PooledTail pooled;
  std::size_t total = 0;
  for (const auto* part : parts) {
    if (part == nullptr) throw ConfigError("pool_tails: null reservoir");
    total += part->retained();
  }
  pooled.values_desc.reserve(total);
  for (const auto* part : parts) {
    const auto values = part->sorted_values_desc();
    pooled.values_desc.insert(pooled.values_desc.end(), values.begin(),
                              values.end());
    pooled.n_observed += part->n_observed();
    if (part->n_observed() > part->retained() && part->retained() > 0) {
      pooled.floor = std::max(pooled.floor, part->min_retained());
    }
  }
  std::sort(pooled.values_desc.begin(), pooled.values_desc.end(),
            std::greater<double>());
  return pooled;
}

}  // namespace perp
