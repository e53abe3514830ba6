#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "ddn/dataset.hpp"
#include "ddn/errors.hpp"
#include "ddn/model.hpp"
#include "ddn/planner.hpp"
#include "ddn/rng.hpp"
#include "ddn/tensor.hpp"

namespace ddn {

// Uniform random action sequence; the empirical floor for every metric.
inline std::vector<std::int32_t> random_plan(std::size_t horizon, std::size_t num_actions,
                                             Rng& rng) {
  if (horizon < 1) throw UsageError("random_plan: horizon must be >= 1");
  std::vector<std::int32_t> plan(horizon);
  for (auto& a : plan) a = static_cast<std::int32_t>(rng.below(num_actions));
  return plan;
}

inline std::vector<std::int32_t> random_plan(std::size_t horizon, std::size_t num_actions,
                                             std::uint64_t seed) {
  Rng rng(seed);
  return random_plan(horizon, num_actions, rng);
}

// Nearest-neighbor policy: stores a key per training sequence (start and goal
// encoded by f, or the raw features) and replays that sequence's actions.
class RetrievalIndex {
 public:
  // raw_features switches the key space from the learned embedding to the
  // concatenated raw observations.
  template <typename M>
  static RetrievalIndex build(const Dataset& train, const M& model, bool raw_features = false) {
    if (train.seqs.empty()) throw UsageError("retrieval index: empty training set");
    RetrievalIndex index;
    index.raw_ = raw_features;
    for (const Sequence& s : train.seqs) {
      index.keys_.push_back(make_key(s.observation(0), s.observation(s.length() - 1), model,
                                     raw_features));
      index.plans_.push_back(s.actions);
    }
    return index;
  }

  std::size_t size() const { return keys_.size(); }

  // Nearest stored key by squared L2; ties go to the lowest stored index.
  // The retrieved plan must already have the requested horizon: length
  // adaptation is an error, not a silent fix.
  template <typename M>
  std::vector<std::int32_t> plan(const Tensor<float>& obs_t, const Tensor<float>& obs_goal,
                                 const M& model, std::size_t horizon) const {
    const Tensor<float> key = make_key(obs_t, obs_goal, model, raw_);
    std::size_t best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < keys_.size(); ++i) {
      const double d = latent_sqdist(keys_[i], key);
      if (d < best_dist) {
        best_dist = d;
        best = i;
      }
    }
    const std::vector<std::int32_t>& found = plans_[best];
    if (found.size() != horizon) {
      throw UsageError("retrieval: nearest sequence has horizon " +
                       std::to_string(found.size()) + ", requested " + std::to_string(horizon) +
                       " (refusing to pad or truncate)");
    }
    return found;
  }

 private:
  template <typename M>
  static Tensor<float> make_key(const Tensor<float>& obs_t, const Tensor<float>& obs_goal,
                                const M& model, bool raw) {
    if (raw) return ops::concat_cols(obs_t, obs_goal);
    return ops::concat_cols(model.encode_state(obs_t), model.encode_state(obs_goal));
  }

  bool raw_ = false;
  std::vector<Tensor<float>> keys_;
  std::vector<std::vector<std::int32_t>> plans_;
};

// Goal-conditioned recurrent policy: greedy autoregressive decode with the
// state input held at the encoded start observation (no forward dynamics).
// Matches the conjugate-only training configuration.
template <LatentModel M>
std::vector<std::int32_t> rnn_policy_plan(const M& model, const Tensor<float>& obs_t,
                                          const Tensor<float>& obs_goal, std::size_t horizon) {
  if (horizon < 1) throw UsageError("rnn_policy_plan: horizon must be >= 1");
  const Tensor<float> x_start = model.encode_state(obs_t);
  const Tensor<float> x_goal = model.encode_state(obs_goal);
  Tensor<float> hidden = model.zero_hidden();
  std::int32_t prev = model.start_token();
  std::vector<std::int32_t> actions;
  actions.reserve(horizon);
  for (std::size_t t = 0; t < horizon; ++t) {
    auto [abar_hat, next_hidden] =
        model.conjugate_step(x_start, model.embed_action(prev), x_goal, hidden);
    hidden = std::move(next_hidden);
    prev = top_k_actions(model.decode_action(abar_hat), 1).front().first;
    actions.push_back(prev);
  }
  return actions;
}

}  // namespace ddn
