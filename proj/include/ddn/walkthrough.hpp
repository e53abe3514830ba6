#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "ddn/errors.hpp"
#include "ddn/planner.hpp"
#include "ddn/tensor.hpp"

namespace ddn {

// Log-domain transition scores between clips; diagonal unused.
struct ScoreMatrix {
  Tensor<double> r;  // [L, L]
  std::size_t size() const { return r.rows(); }
};

inline constexpr std::size_t kMaxWalkthroughClips = 16;

// R[i][j] = log sum_a exp(-0.5 * |T(x_i, g(a)) - x_j|^2) * p(a | x_i), with
// p(.|x_i) decoded from one conjugate step off the start token, goal-conditioned
// on the last clip. Log-sum-exp keeps every off-diagonal entry finite.
template <LatentModel M>
ScoreMatrix score_matrix(const std::vector<Tensor<float>>& clips, const M& model) {
  const std::size_t count = clips.size();
  if (count < 2) throw UsageError("score_matrix: need at least 2 clips");
  const std::size_t num_actions = model.num_actions();

  std::vector<Tensor<float>> x(count);
  for (std::size_t i = 0; i < count; ++i) x[i] = model.encode_state(clips[i]);
  const Tensor<float>& x_goal = x[count - 1];
  const Tensor<float> start = model.embed_action(model.start_token());

  ScoreMatrix out;
  out.r = Tensor<double>({count, count}, -std::numeric_limits<double>::infinity());

  std::vector<Tensor<float>> embeds(num_actions);
  for (std::size_t a = 0; a < num_actions; ++a) {
    embeds[a] = model.embed_action(static_cast<std::int32_t>(a));
  }

  std::vector<double> terms(num_actions);
  for (std::size_t i = 0; i < count; ++i) {
    auto [abar_hat, hidden] = model.conjugate_step(x[i], start, x_goal, model.zero_hidden());
    (void)hidden;
    const Tensor<float> probs = model.decode_action(abar_hat);
    std::vector<Tensor<float>> preds(num_actions);
    for (std::size_t a = 0; a < num_actions; ++a) preds[a] = model.forward_step(x[i], embeds[a]);
    for (std::size_t j = 0; j < count; ++j) {
      if (j == i) continue;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < num_actions; ++a) {
        terms[a] = -0.5 * latent_sqdist(preds[a], x[j]) +
                   std::log(std::max(1e-300, static_cast<double>(probs[a])));
        mx = std::max(mx, terms[a]);
      }
      double acc = 0.0;
      for (std::size_t a = 0; a < num_actions; ++a) acc += std::exp(terms[a] - mx);
      out.r.at(i, j) = mx + std::log(acc);
    }
  }
  return out;
}

inline double permutation_score(const ScoreMatrix& m, const std::vector<std::int32_t>& order) {
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < order.size(); ++i) {
    acc += m.r.at(static_cast<std::size_t>(order[i]), static_cast<std::size_t>(order[i + 1]));
  }
  return acc;
}

namespace detail {

inline void check_perm_size(const ScoreMatrix& m) {
  if (m.size() < 2) throw UsageError("best_permutation: need at least 2 clips");
  if (m.size() > kMaxWalkthroughClips) {
    throw CapacityError("best_permutation: at most " + std::to_string(kMaxWalkthroughClips) +
                        " clips, got " + std::to_string(m.size()));
  }
}

}  // namespace detail

// Enumerates every ordering of the middle clips in lexicographic order, so
// score ties resolve to the lexicographically smallest permutation.
inline std::vector<std::int32_t> best_permutation_exhaustive(const ScoreMatrix& m) {
  detail::check_perm_size(m);
  const std::size_t count = m.size();
  std::vector<std::int32_t> middle;
  for (std::size_t i = 1; i + 1 < count; ++i) middle.push_back(static_cast<std::int32_t>(i));

  std::vector<std::int32_t> order(count);
  order.front() = 0;
  order.back() = static_cast<std::int32_t>(count - 1);
  std::vector<std::int32_t> best;
  double best_score = -std::numeric_limits<double>::infinity();
  do {
    std::copy(middle.begin(), middle.end(), order.begin() + 1);
    const double s = permutation_score(m, order);
    if (s > best_score) {
      best_score = s;
      best = order;
    }
  } while (std::next_permutation(middle.begin(), middle.end()));
  return best;
}

// Held-Karp over subsets of the middle clips. Paths are packed four bits per
// element, first element most significant, so an unsigned compare of two
// packed prefixes is a lexicographic compare; equal-score states keep the
// smaller packing and the final answer matches exhaustive enumeration.
inline std::vector<std::int32_t> best_permutation_held_karp(const ScoreMatrix& m) {
  detail::check_perm_size(m);
  const std::size_t count = m.size();
  if (count == 2) return {0, 1};
  const std::size_t mid = count - 2;  // middle clips are 1 .. count-2
  const std::size_t full = std::size_t{1} << mid;

  const auto r = [&](std::size_t a, std::size_t b) { return m.r.at(a, b); };
  const double neg_inf = -std::numeric_limits<double>::infinity();

  std::vector<std::vector<double>> score(full, std::vector<double>(mid, neg_inf));
  std::vector<std::vector<std::uint64_t>> path(full, std::vector<std::uint64_t>(mid, 0));

  const auto packed_append = [mid](std::uint64_t packed, std::size_t len, std::size_t j) {
    return packed | (static_cast<std::uint64_t>(j) << (4 * (mid - 1 - len)));
  };

  for (std::size_t j = 0; j < mid; ++j) {
    const std::size_t mask = std::size_t{1} << j;
    score[mask][j] = r(0, j + 1);
    path[mask][j] = packed_append(0, 0, j);
  }

  for (std::size_t mask = 1; mask < full; ++mask) {
    const auto len = static_cast<std::size_t>(std::popcount(mask));
    for (std::size_t j = 0; j < mid; ++j) {
      if (!(mask & (std::size_t{1} << j)) || score[mask][j] == neg_inf) continue;
      for (std::size_t k = 0; k < mid; ++k) {
        if (mask & (std::size_t{1} << k)) continue;
        const std::size_t next_mask = mask | (std::size_t{1} << k);
        const double cand = score[mask][j] + r(j + 1, k + 1);
        const std::uint64_t cand_path = packed_append(path[mask][j], len, k);
        if (cand > score[next_mask][k] ||
            (cand == score[next_mask][k] && cand_path < path[next_mask][k])) {
          score[next_mask][k] = cand;
          path[next_mask][k] = cand_path;
        }
      }
    }
  }

  double best_score = neg_inf;
  std::uint64_t best_path = 0;
  bool found = false;
  for (std::size_t j = 0; j < mid; ++j) {
    const double cand = score[full - 1][j] + r(j + 1, count - 1);
    if (!found || cand > best_score || (cand == best_score && path[full - 1][j] < best_path)) {
      found = true;
      best_score = cand;
      best_path = path[full - 1][j];
    }
  }

  std::vector<std::int32_t> order(count);
  order.front() = 0;
  order.back() = static_cast<std::int32_t>(count - 1);
  for (std::size_t i = 0; i < mid; ++i) {
    const auto j = static_cast<std::size_t>((best_path >> (4 * (mid - 1 - i))) & 0xF);
    order[i + 1] = static_cast<std::int32_t>(j + 1);
  }
  return order;
}

// Endpoint-fixed permutation maximizing the path score: exhaustive for up to
// 8 clips, Held-Karp up to 16, capacity error beyond.
inline std::vector<std::int32_t> best_permutation(const ScoreMatrix& m) {
  detail::check_perm_size(m);
  return m.size() <= 8 ? best_permutation_exhaustive(m) : best_permutation_held_karp(m);
}

// Order a pool of observations between its fixed first (start) and last
// (goal) clips.
template <LatentModel M>
std::vector<std::int32_t> walkthrough_plan(const std::vector<Tensor<float>>& clips,
                                           const M& model) {
  return best_permutation(score_matrix(clips, model));
}

}  // namespace ddn
