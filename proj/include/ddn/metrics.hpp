#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <set>
#include <string>
#include <vector>

#include "ddn/errors.hpp"

namespace ddn {

// ---------------------------------------------------------------------------
// Procedure-planning metrics. Plans are action-id sequences of equal length.
// ---------------------------------------------------------------------------

// 1 iff the plans match elementwise.
inline double success_rate(const std::vector<std::int32_t>& pred,
                           const std::vector<std::int32_t>& gt) {
  if (pred.size() != gt.size()) {
    throw UsageError("success_rate: plan lengths differ (" + std::to_string(pred.size()) +
                     " vs " + std::to_string(gt.size()) + ")");
  }
  return pred == gt ? 1.0 : 0.0;
}

// Fraction of positions whose actions match.
inline double step_accuracy(const std::vector<std::int32_t>& pred,
                            const std::vector<std::int32_t>& gt) {
  if (pred.size() != gt.size()) {
    throw UsageError("step_accuracy: plan lengths differ (" + std::to_string(pred.size()) +
                     " vs " + std::to_string(gt.size()) + ")");
  }
  if (pred.empty()) throw UsageError("step_accuracy: empty plans");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == gt[i];
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

// Set-based intersection over union; repeated actions collapse.
inline double mean_iou(const std::vector<std::int32_t>& pred,
                       const std::vector<std::int32_t>& gt) {
  if (pred.empty() || gt.empty()) throw UsageError("mean_iou: empty plan");
  const std::set<std::int32_t> p(pred.begin(), pred.end());
  const std::set<std::int32_t> g(gt.begin(), gt.end());
  std::size_t inter = 0;
  for (std::int32_t a : p) inter += g.count(a);
  const std::size_t uni = p.size() + g.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

// ---------------------------------------------------------------------------
// Walkthrough-ordering metrics. `order` maps position -> clip index against
// an identity ground truth. By default only the middle elements are scored:
// the endpoints are fixed by construction. The full-sequence variants score
// arbitrary permutations.
// ---------------------------------------------------------------------------

inline void check_permutation(const std::vector<std::int32_t>& order, bool fixed_endpoints) {
  const std::size_t count = order.size();
  if (count < 2) throw UsageError("ordering: need at least 2 clips");
  std::vector<bool> seen(count, false);
  for (std::int32_t v : order) {
    if (v < 0 || static_cast<std::size_t>(v) >= count || seen[static_cast<std::size_t>(v)]) {
      throw UsageError("ordering: not a permutation of 0.." + std::to_string(count - 1));
    }
    seen[static_cast<std::size_t>(v)] = true;
  }
  if (fixed_endpoints &&
      (order.front() != 0 || order.back() != static_cast<std::int32_t>(count - 1))) {
    throw UsageError("ordering: endpoints must stay fixed");
  }
}

// Count of middle positions holding the wrong clip.
inline std::size_t hamming_distance(const std::vector<std::int32_t>& order) {
  check_permutation(order, true);
  std::size_t wrong = 0;
  for (std::size_t i = 1; i + 1 < order.size(); ++i) {
    wrong += order[i] != static_cast<std::int32_t>(i);
  }
  return wrong;
}

// Fraction of middle pairs whose relative order is preserved; vacuously 1
// with fewer than two middle elements.
inline double pairwise_accuracy(const std::vector<std::int32_t>& order) {
  check_permutation(order, true);
  const std::size_t count = order.size();
  if (count < 4) return 1.0;
  std::size_t good = 0, pairs = 0;
  for (std::size_t i = 1; i + 1 < count; ++i) {
    for (std::size_t j = i + 1; j + 1 < count; ++j) {
      ++pairs;
      good += order[i] < order[j];
    }
  }
  return static_cast<double>(good) / static_cast<double>(pairs);
}

// Full-sequence variants (endpoints scored too, permutation unconstrained).
inline std::size_t hamming_distance_full(const std::vector<std::int32_t>& order) {
  check_permutation(order, false);
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    wrong += order[i] != static_cast<std::int32_t>(i);
  }
  return wrong;
}

inline double pairwise_accuracy_full(const std::vector<std::int32_t>& order) {
  check_permutation(order, false);
  const std::size_t count = order.size();
  if (count < 2) return 1.0;
  std::size_t good = 0, pairs = 0;
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t j = i + 1; j < count; ++j) {
      ++pairs;
      good += order[i] < order[j];
    }
  }
  return static_cast<double>(good) / static_cast<double>(pairs);
}

// ---------------------------------------------------------------------------
// Report aggregation.
// ---------------------------------------------------------------------------

struct EvalRow {
  std::size_t horizon = 0;
  std::string metric;
  double value = 0.0;  // NaN when no examples matched the horizon
  std::size_t n = 0;
  std::uint64_t seed = 0;
};

struct EvalReport {
  std::vector<std::pair<std::string, std::string>> config_echo;
  std::vector<EvalRow> rows;

  std::string to_csv() const {
    std::string out;
    for (const auto& [k, v] : config_echo) out += "# " + k + "=" + v + "\n";
    out += "horizon,metric,value,n,seed\n";
    for (const EvalRow& r : rows) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "%zu,%s,%.9g,%zu,%llu\n", r.horizon, r.metric.c_str(),
                    r.value, r.n, static_cast<unsigned long long>(r.seed));
      out += buf;
    }
    return out;
  }
};

}  // namespace ddn
