#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "ddn/adam.hpp"
#include "ddn/dataset.hpp"
#include "ddn/errors.hpp"
#include "ddn/graph.hpp"
#include "ddn/model.hpp"
#include "ddn/rng.hpp"

namespace ddn {

struct TrainConfig {
  int epochs = 200;
  std::size_t batch_size = 256;  // clamped to the dataset size
  float lr = 1e-4f;
  float decay_factor = 0.5f;
  int patience = 5;              // epochs of stalled validation loss before decaying
  double val_fraction = 0.1;     // seeded split carved from the training sequences
  std::uint64_t seed = 0;
  Ablation ablation = Ablation::kFull;
};

struct TrainResult {
  std::vector<double> train_loss;  // one entry per epoch run
  std::vector<double> val_loss;
  std::vector<float> lr_history;
  int epochs_run = 0;
};

namespace detail {

// Loss over a set of sequences as one forward build; groups by horizon so
// mixed-horizon batches combine by total step count.
template <typename S>
struct BatchLoss {
  typename Tape<S>::NodeId total;
  std::size_t steps;
};

inline BatchLoss<float> build_batch_loss(Tape<float>& tape, const DdnModel<float>& model,
                                         std::span<const Sequence* const> seqs,
                                         Ablation ablation) {
  using NodeId = Tape<float>::NodeId;
  const auto bound = model.bind(tape);
  const float alpha = ablation == Ablation::kNoConjugate ? 1.0f : model.config().alpha;

  NodeId state_sum = -1;
  NodeId action_sum = -1;
  std::size_t steps = 0;

  if (ablation == Ablation::kNoConjugate) {
    TripletBatch t = make_triplets(seqs);
    auto parts = model.build_forward_loss(tape, bound, t.obs_t, t.actions, t.obs_next);
    state_sum = parts.state_sum;
    steps = parts.steps;
  } else {
    const RolloutMode mode = ablation == Ablation::kNoForward ? RolloutMode::kPolicyOnly
                             : model.config().teacher_forcing ? RolloutMode::kTeacherForce
                                                              : RolloutMode::kCrossFeed;
    std::map<std::size_t, std::vector<const Sequence*>> groups;
    for (const Sequence* s : seqs) groups[s->horizon()].push_back(s);
    for (const auto& [h, group] : groups) {
      SeqBatch<float> batch = make_seq_batch(std::span<const Sequence* const>(group));
      auto parts = model.build_rollout(tape, bound, batch, mode);
      steps += parts.steps;
      if (parts.state_sum >= 0) {
        state_sum = state_sum < 0 ? parts.state_sum : tape.add(state_sum, parts.state_sum);
      }
      if (parts.action_sum >= 0) {
        action_sum = action_sum < 0 ? parts.action_sum : tape.add(action_sum, parts.action_sum);
      }
    }
  }

  const float inv = 1.0f / static_cast<float>(steps);
  NodeId total = -1;
  if (state_sum >= 0) total = tape.scale(state_sum, alpha * inv);
  if (action_sum >= 0) {
    NodeId p = tape.scale(action_sum, inv);
    total = total < 0 ? p : tape.add(total, p);
  }
  return {total, steps};
}

}  // namespace detail

// Loss of `model` on a sequence set without updating anything.
inline double evaluate_loss(const DdnModel<float>& model,
                            std::span<const Sequence* const> seqs, Ablation ablation) {
  Tape<float> tape;
  auto loss = detail::build_batch_loss(tape, model, seqs, ablation);
  return static_cast<double>(tape.value(loss.total).item());
}

// Minibatch Adam over the dataset. Deterministic for a fixed seed; the
// learning rate halves whenever the validation loss fails to improve for
// `patience` consecutive epochs.
inline TrainResult train(DdnModel<float>& model, const Dataset& data, const TrainConfig& cfg) {
  if (data.seqs.empty()) throw UsageError("train: empty dataset");
  if (cfg.epochs < 1) throw UsageError("train: epochs must be >= 1");
  if (data.feature_dim != model.feature_dim() || data.num_actions != model.num_actions()) {
    throw UsageError("train: dataset (D=" + std::to_string(data.feature_dim) + ", A=" +
                     std::to_string(data.num_actions) + ") does not match model (D=" +
                     std::to_string(model.feature_dim()) + ", A=" +
                     std::to_string(model.num_actions()) + ")");
  }

  Rng rng(cfg.seed);
  Rng split_rng = rng.split();
  Rng shuffle_rng = rng.split();

  std::vector<const Sequence*> all;
  all.reserve(data.seqs.size());
  for (const Sequence& s : data.seqs) all.push_back(&s);
  split_rng.shuffle(all.begin(), all.end());
  const std::size_t val_n = static_cast<std::size_t>(cfg.val_fraction * all.size());
  std::vector<const Sequence*> val(all.begin(), all.begin() + val_n);
  std::vector<const Sequence*> pool(all.begin() + val_n, all.end());
  if (pool.empty()) {
    pool = std::move(val);
    val.clear();
  }

  AdamConfig<float> adam_cfg;
  adam_cfg.lr = cfg.lr;
  adam_cfg.decay_factor = cfg.decay_factor;
  adam_cfg.patience = cfg.patience;
  Adam<float> adam(adam_cfg);
  auto params = model.parameters();

  const std::size_t batch_size = std::max<std::size_t>(1, std::min(cfg.batch_size, pool.size()));

  TrainResult result;
  double best_val = std::numeric_limits<double>::infinity();
  int stalled = 0;
  Tape<float> tape;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(pool.begin(), pool.end());
    double epoch_loss = 0.0;
    std::size_t epoch_steps = 0;
    for (std::size_t begin = 0; begin < pool.size(); begin += batch_size) {
      const std::size_t end = std::min(begin + batch_size, pool.size());
      std::span<const Sequence* const> batch(pool.data() + begin, end - begin);
      tape.reset();
      auto loss = detail::build_batch_loss(tape, model, batch, cfg.ablation);
      tape.backward(loss.total);
      std::vector<Tensor<float>> grads;
      grads.reserve(tape.params().size());
      for (auto id : tape.params()) grads.push_back(tape.grad(id));
      adam.step(params, grads);
      epoch_loss += static_cast<double>(tape.value(loss.total).item()) *
                    static_cast<double>(loss.steps);
      epoch_steps += loss.steps;
    }
    const double train_loss = epoch_loss / static_cast<double>(epoch_steps);
    const double vloss = val.empty()
                             ? train_loss
                             : evaluate_loss(model, std::span<const Sequence* const>(val),
                                             cfg.ablation);
    result.train_loss.push_back(train_loss);
    result.val_loss.push_back(vloss);
    result.lr_history.push_back(adam.lr());
    ++result.epochs_run;

    if (vloss < best_val - 1e-9) {
      best_val = vloss;
      stalled = 0;
    } else if (++stalled >= cfg.patience) {
      adam.decay_lr();
      stalled = 0;
    }
  }
  return result;
}

}  // namespace ddn
