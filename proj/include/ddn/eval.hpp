#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "ddn/dataset.hpp"
#include "ddn/metrics.hpp"
#include "ddn/planner.hpp"
#include "ddn/walkthrough.hpp"

namespace ddn {

// Mean procedure-planning metrics per horizon. `plan_fn` receives the start
// observation, the goal observation and the horizon, and returns the
// predicted plan. Horizons with no matching sequences produce NaN rows with
// n = 0 rather than failing.
template <typename PlanFn>
EvalReport evaluate_plans(PlanFn&& plan_fn, const Dataset& test,
                          std::span<const std::size_t> horizons, std::uint64_t seed) {
  if (test.seqs.empty()) throw UsageError("evaluate: empty test set");
  EvalReport report;
  for (const std::size_t h : horizons) {
    double success = 0.0, accuracy = 0.0, iou = 0.0;
    std::size_t n = 0;
    for (const Sequence& s : test.seqs) {
      if (s.horizon() != h) continue;
      const std::vector<std::int32_t> pred =
          plan_fn(s.observation(0), s.observation(s.length() - 1), h);
      success += success_rate(pred, s.actions);
      accuracy += step_accuracy(pred, s.actions);
      iou += mean_iou(pred, s.actions);
      ++n;
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const double inv = n ? 1.0 / static_cast<double>(n) : nan;
    report.rows.push_back({h, "success_rate", n ? success * inv : nan, n, seed});
    report.rows.push_back({h, "accuracy", n ? accuracy * inv : nan, n, seed});
    report.rows.push_back({h, "miou", n ? iou * inv : nan, n, seed});
  }
  return report;
}

// Mean walkthrough-ordering metrics per horizon (= pool size minus one).
// `order_fn` receives the clip pool in ground-truth order and returns the
// predicted position -> clip permutation.
template <typename OrderFn>
EvalReport evaluate_orderings(OrderFn&& order_fn, const Dataset& test,
                              std::span<const std::size_t> horizons, std::uint64_t seed) {
  if (test.seqs.empty()) throw UsageError("evaluate: empty test set");
  EvalReport report;
  for (const std::size_t h : horizons) {
    double ham = 0.0, pacc = 0.0;
    std::size_t n = 0;
    for (const Sequence& s : test.seqs) {
      if (s.horizon() != h) continue;
      std::vector<Tensor<float>> clips;
      clips.reserve(s.length());
      for (std::size_t i = 0; i < s.length(); ++i) clips.push_back(s.observation(i));
      const std::vector<std::int32_t> order = order_fn(clips);
      ham += static_cast<double>(hamming_distance(order));
      pacc += pairwise_accuracy(order);
      ++n;
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const double inv = n ? 1.0 / static_cast<double>(n) : nan;
    report.rows.push_back({h, "hamming", n ? ham * inv : nan, n, seed});
    report.rows.push_back({h, "pairwise_acc", n ? pacc * inv : nan, n, seed});
  }
  return report;
}

}  // namespace ddn
