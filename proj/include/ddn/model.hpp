#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ddn/errors.hpp"
#include "ddn/graph.hpp"
#include "ddn/rng.hpp"
#include "ddn/tensor.hpp"

namespace ddn {

// Which parts of the dual model are trained.
enum class Ablation {
  kFull,          // forward + conjugate dynamics, interleaved rollout
  kNoForward,     // conjugate dynamics only; goal-conditioned recurrent policy
  kNoConjugate,   // forward dynamics only, trained on triplets
};

inline const char* ablation_name(Ablation a) {
  switch (a) {
    case Ablation::kFull: return "full";
    case Ablation::kNoForward: return "no_t";
    case Ablation::kNoConjugate: return "no_p";
  }
  return "?";
}

inline Ablation ablation_from_name(const std::string& s) {
  if (s == "full") return Ablation::kFull;
  if (s == "no_t" || s == "no-t" || s == "no-T") return Ablation::kNoForward;
  if (s == "no_p" || s == "no-p" || s == "no-P") return Ablation::kNoConjugate;
  throw ConfigError("unknown ablation: " + s);
}

struct ModelConfig {
  std::size_t feature_dim = 3200;  // observation dimensionality D
  std::size_t latent_dim = 128;    // state and action embedding width
  std::size_t num_actions = 105;   // discrete action vocabulary A
  std::size_t hidden_dim = 128;    // MLP / recurrent width; must equal latent_dim
  float alpha = 0.001f;            // weight of the state loss in the combined loss
  std::size_t horizon = 3;         // default rollout horizon
  bool teacher_forcing = false;    // rollouts cross-feed predictions unless set

  void validate() const {
    if (feature_dim == 0 || latent_dim == 0 || num_actions == 0 || hidden_dim == 0) {
      throw UsageError("model config: all dimensions must be positive");
    }
    if (!(alpha > 0.0f)) throw UsageError("model config: alpha must be positive");
    if (hidden_dim != latent_dim) {
      throw UsageError("model config: hidden_dim must equal latent_dim (recurrent output is the latent action)");
    }
  }
};

// A batch of demonstration sequences sharing one horizon: H+1 observation
// matrices of shape [B, D] and H action-id columns of length B.
template <typename S>
struct SeqBatch {
  std::size_t horizon = 0;
  std::size_t batch = 0;
  std::vector<Tensor<S>> obs;                    // H+1 entries, each [B, D]
  std::vector<std::vector<std::int32_t>> act;    // H entries, each length B
};

// How a rollout consumes states and actions.
enum class RolloutMode {
  kCrossFeed,      // T advances the state chain; T consumes the predicted action
  kTeacherForce,   // every input is ground truth
  kPolicyOnly,     // no forward dynamics; state input held at the start state
};

// Dual dynamics model: state encoder f, action embedding g, action decoder h,
// forward dynamics T and recurrent conjugate dynamics P. f and g are single
// instances shared by every loss path.
template <typename S>
class DdnModel {
 public:
  using NodeId = typename Tape<S>::NodeId;

  DdnModel() : DdnModel(ModelConfig{}, 0) {}

  DdnModel(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    const std::size_t d = cfg_.feature_dim, l = cfg_.latent_dim, h = cfg_.hidden_dim,
                      a = cfg_.num_actions;
    f_w1_ = Tensor<S>({d, h});
    f_b1_ = Tensor<S>({h});
    f_w2_ = Tensor<S>({h, l});
    f_b2_ = Tensor<S>({l});
    g_table_ = Tensor<S>({a + 1, l});  // row A is the start-of-sequence token
    h_w_ = Tensor<S>({l, a});
    h_b_ = Tensor<S>({a});
    t_w1_ = Tensor<S>({2 * l, h});
    t_b1_ = Tensor<S>({h});
    t_w2_ = Tensor<S>({h, l});
    t_b2_ = Tensor<S>({l});
    p_w1_ = Tensor<S>({3 * l + h, h});  // [x, a_prev, goal, hidden] stacked
    p_b1_ = Tensor<S>({h});
    p_w2_ = Tensor<S>({h + h, h});
    p_b2_ = Tensor<S>({h});
    init_params(seed);
  }

  const ModelConfig& config() const { return cfg_; }
  std::size_t feature_dim() const { return cfg_.feature_dim; }
  std::size_t latent_dim() const { return cfg_.latent_dim; }
  std::size_t num_actions() const { return cfg_.num_actions; }
  std::int32_t start_token() const { return static_cast<std::int32_t>(cfg_.num_actions); }

  // Declared parameter order; checkpoints and Adam state follow it.
  std::vector<Tensor<S>*> parameters() {
    return {&f_w1_, &f_b1_, &f_w2_, &f_b2_, &g_table_, &h_w_, &h_b_,
            &t_w1_, &t_b1_, &t_w2_, &t_b2_, &p_w1_, &p_b1_, &p_w2_, &p_b2_};
  }
  std::vector<const Tensor<S>*> parameters() const {
    return {&f_w1_, &f_b1_, &f_w2_, &f_b2_, &g_table_, &h_w_, &h_b_,
            &t_w1_, &t_b1_, &t_w2_, &t_b2_, &p_w1_, &p_b1_, &p_w2_, &p_b2_};
  }
  static std::vector<std::string> parameter_names() {
    return {"f_w1", "f_b1", "f_w2", "f_b2", "g_table", "h_w", "h_b",
            "t_w1", "t_b1", "t_w2", "t_b2", "p_w1", "p_b1", "p_w2", "p_b2"};
  }

  template <typename T>
  DdnModel<T> cast() const {
    DdnModel<T> out(cfg_, 0);
    auto dst = out.parameters();
    auto src = parameters();
    for (std::size_t i = 0; i < src.size(); ++i) *dst[i] = src[i]->template cast<T>();
    return out;
  }

  // ------------------------------------------------------------------
  // Inference (no tape). Const and safe to call concurrently on a frozen
  // model. Rank-1 in, rank-1 out; batches go through the graph builders.
  // ------------------------------------------------------------------

  Tensor<S> encode_state(const Tensor<S>& obs) const {
    if (obs.numel() != cfg_.feature_dim) {
      throw DimError("encode_state: expected " + std::to_string(cfg_.feature_dim) +
                     " features, got " + std::to_string(obs.numel()));
    }
    Tensor<S> hidden = ops::relu(ops::affine(obs, f_w1_, f_b1_));
    Tensor<S> x = ops::affine(hidden, f_w2_, f_b2_);
    check_finite(x, "encode_state");
    return x;
  }

  Tensor<S> embed_action(std::int32_t id) const {
    if (id < 0 || id > start_token()) {
      throw RangeError("embed_action: id " + std::to_string(id) + " out of range [0, " +
                       std::to_string(start_token()) + "]");
    }
    const std::size_t l = cfg_.latent_dim;
    Tensor<S> row({l});
    const S* src = g_table_.row(static_cast<std::size_t>(id));
    for (std::size_t j = 0; j < l; ++j) row[j] = src[j];
    return row;
  }

  Tensor<S> decode_action(const Tensor<S>& abar) const {
    require_latent(abar, "decode_action");
    Tensor<S> probs = ops::softmax_rows(ops::affine(abar, h_w_, h_b_));
    check_finite(probs, "decode_action");
    return probs;
  }

  Tensor<S> forward_step(const Tensor<S>& x, const Tensor<S>& abar) const {
    require_latent(x, "forward_step");
    require_latent(abar, "forward_step");
    Tensor<S> in = ops::concat_cols(x, abar);
    Tensor<S> hidden = ops::relu(ops::affine(in, t_w1_, t_b1_));
    Tensor<S> next = ops::affine(hidden, t_w2_, t_b2_);
    check_finite(next, "forward_step");
    return next;
  }

  Tensor<S> zero_hidden() const { return Tensor<S>({2, cfg_.hidden_dim}); }

  // One step of the conjugate dynamics. `hidden` has shape {2, hidden_dim};
  // pass zero_hidden() at sequence start. The predicted latent action is the
  // top recurrent layer's new state.
  std::pair<Tensor<S>, Tensor<S>> conjugate_step(const Tensor<S>& x, const Tensor<S>& abar_prev,
                                                 const Tensor<S>& x_goal,
                                                 const Tensor<S>& hidden) const {
    require_latent(x, "conjugate_step");
    require_latent(abar_prev, "conjugate_step");
    require_latent(x_goal, "conjugate_step");
    const std::size_t h = cfg_.hidden_dim;
    if (hidden.rank() != 2 || hidden.rows() != 2 || hidden.cols() != h) {
      throw DimError("conjugate_step: hidden must be {2, " + std::to_string(h) + "}, got " +
                     hidden.shape_str());
    }
    Tensor<S> h1({h}), h2({h});
    for (std::size_t j = 0; j < h; ++j) {
      h1[j] = hidden.at(0, j);
      h2[j] = hidden.at(1, j);
    }
    Tensor<S> in = ops::concat_cols(ops::concat_cols(x, abar_prev), x_goal);
    Tensor<S> h1n = ops::tanh(ops::affine(ops::concat_cols(in, h1), p_w1_, p_b1_));
    Tensor<S> h2n = ops::tanh(ops::affine(ops::concat_cols(h1n, h2), p_w2_, p_b2_));
    check_finite(h2n, "conjugate_step");
    Tensor<S> new_hidden({2, h});
    for (std::size_t j = 0; j < h; ++j) {
      new_hidden.at(0, j) = h1n[j];
      new_hidden.at(1, j) = h2n[j];
    }
    return {std::move(h2n), std::move(new_hidden)};
  }

  // ------------------------------------------------------------------
  // Graph builders for training and gradient checking.
  // ------------------------------------------------------------------

  // Tape node ids of every parameter, in declared order.
  struct Bound {
    NodeId f_w1, f_b1, f_w2, f_b2, g_table, h_w, h_b;
    NodeId t_w1, t_b1, t_w2, t_b2, p_w1, p_b1, p_w2, p_b2;
    std::vector<NodeId> all;
  };

  Bound bind(Tape<S>& t) const {
    Bound b{};
    b.f_w1 = t.param(f_w1_);
    b.f_b1 = t.param(f_b1_);
    b.f_w2 = t.param(f_w2_);
    b.f_b2 = t.param(f_b2_);
    b.g_table = t.param(g_table_);
    b.h_w = t.param(h_w_);
    b.h_b = t.param(h_b_);
    b.t_w1 = t.param(t_w1_);
    b.t_b1 = t.param(t_b1_);
    b.t_w2 = t.param(t_w2_);
    b.t_b2 = t.param(t_b2_);
    b.p_w1 = t.param(p_w1_);
    b.p_b1 = t.param(p_b1_);
    b.p_w2 = t.param(p_w2_);
    b.p_b2 = t.param(p_b2_);
    b.all = {b.f_w1, b.f_b1, b.f_w2, b.f_b2, b.g_table, b.h_w, b.h_b,
             b.t_w1, b.t_b1, b.t_w2, b.t_b2, b.p_w1, b.p_b1, b.p_w2, b.p_b2};
    return b;
  }

  NodeId build_encode(Tape<S>& t, const Bound& b, NodeId obs) const {
    return t.affine(t.relu(t.affine(obs, b.f_w1, b.f_b1)), b.f_w2, b.f_b2);
  }

  NodeId build_embed(Tape<S>& t, const Bound& b, std::vector<std::int32_t> ids) const {
    return t.gather_rows(b.g_table, std::move(ids));
  }

  NodeId build_decode_logits(Tape<S>& t, const Bound& b, NodeId abar) const {
    return t.affine(abar, b.h_w, b.h_b);
  }

  NodeId build_forward(Tape<S>& t, const Bound& b, NodeId x, NodeId abar) const {
    NodeId in = t.concat_cols(x, abar);
    return t.affine(t.relu(t.affine(in, b.t_w1, b.t_b1)), b.t_w2, b.t_b2);
  }

  struct PState {
    NodeId h1, h2;
  };

  // One recurrent conjugate step on the tape; returns the predicted latent
  // action node (== new top hidden) and the new recurrent state.
  std::pair<NodeId, PState> build_pstep(Tape<S>& t, const Bound& b, NodeId x, NodeId abar_prev,
                                        NodeId x_goal, PState state) const {
    NodeId in = t.concat_cols(t.concat_cols(x, abar_prev), x_goal);
    NodeId h1 = t.tanh(t.affine(t.concat_cols(in, state.h1), b.p_w1, b.p_b1));
    NodeId h2 = t.tanh(t.affine(t.concat_cols(h1, state.h2), b.p_w2, b.p_b2));
    return {h2, PState{h1, h2}};
  }

  PState zero_pstate(Tape<S>& t, std::size_t batch) const {
    NodeId z1 = t.input(Tensor<S>({batch, cfg_.hidden_dim}));
    NodeId z2 = t.input(Tensor<S>({batch, cfg_.hidden_dim}));
    return {z1, z2};
  }

  // Summed (not averaged) loss terms, so that groups of different horizons
  // can be combined by total step count.
  struct LossParts {
    NodeId state_sum = -1;    // sum over (sequence, step) of |x_hat - f(o)|^2
    NodeId action_sum = -1;   // sum of |a_hat - g(a)|^2 + cross-entropy terms
    std::size_t steps = 0;    // number of (sequence, step) pairs
  };

  // The interleaved rollout. At step t the conjugate model consumes the
  // rolled state, the ground-truth previous action and the goal to predict
  // the current latent action; the forward model consumes the rolled state
  // and that prediction to advance the chain. Losses always compare against
  // ground truth.
  LossParts build_rollout(Tape<S>& t, const Bound& b, const SeqBatch<S>& batch,
                          RolloutMode mode) const {
    if (batch.batch == 0 || batch.horizon == 0) throw UsageError("rollout: empty batch");
    const std::size_t ih = batch.horizon;
    LossParts parts;
    parts.steps = batch.batch * ih;

    std::vector<NodeId> enc(ih + 1);
    for (std::size_t i = 0; i <= ih; ++i) enc[i] = build_encode(t, b, t.input(batch.obs[i]));
    NodeId x_goal = enc[ih];

    std::vector<std::int32_t> start_ids(batch.batch, start_token());
    NodeId abar_prev = build_embed(t, b, start_ids);
    PState ps = zero_pstate(t, batch.batch);
    NodeId x_rolled = enc[0];

    for (std::size_t step = 0; step < ih; ++step) {
      NodeId p_state_in = x_rolled;
      if (mode == RolloutMode::kTeacherForce) p_state_in = enc[step];
      if (mode == RolloutMode::kPolicyOnly) p_state_in = enc[0];

      auto [abar_hat, ps_next] = build_pstep(t, b, p_state_in, abar_prev, x_goal, ps);
      ps = ps_next;

      NodeId abar_gt = build_embed(t, b, batch.act[step]);
      NodeId gauss = t.sqdist_sum(abar_hat, abar_gt);
      NodeId ce = t.softmax_xent_sum(build_decode_logits(t, b, abar_hat), batch.act[step]);
      NodeId action_term = t.add(gauss, ce);
      parts.action_sum = parts.action_sum < 0 ? action_term : t.add(parts.action_sum, action_term);

      if (mode != RolloutMode::kPolicyOnly) {
        NodeId t_action = mode == RolloutMode::kTeacherForce ? abar_gt : abar_hat;
        NodeId t_state = mode == RolloutMode::kTeacherForce ? enc[step] : x_rolled;
        NodeId x_next = build_forward(t, b, t_state, t_action);
        NodeId state_term = t.sqdist_sum(x_next, enc[step + 1]);
        parts.state_sum = parts.state_sum < 0 ? state_term : t.add(parts.state_sum, state_term);
        x_rolled = x_next;
      }

      abar_prev = abar_gt;
    }
    return parts;
  }

  // Forward-dynamics loss on (o_t, a_t, o_{t+1}) triplets, every input
  // ground truth.
  LossParts build_forward_loss(Tape<S>& t, const Bound& b, const Tensor<S>& obs_t,
                               const std::vector<std::int32_t>& actions,
                               const Tensor<S>& obs_next) const {
    if (actions.empty()) throw UsageError("forward loss: empty batch");
    LossParts parts;
    parts.steps = actions.size();
    NodeId x_t = build_encode(t, b, t.input(obs_t));
    NodeId x_next = build_encode(t, b, t.input(obs_next));
    NodeId abar = build_embed(t, b, actions);
    NodeId pred = build_forward(t, b, x_t, abar);
    parts.state_sum = t.sqdist_sum(pred, x_next);
    return parts;
  }

  // (alpha * state_sum + action_sum) / steps as a scalar node.
  NodeId combine_loss(Tape<S>& t, const LossParts& parts, S alpha) const {
    const S inv = S(1) / static_cast<S>(parts.steps);
    NodeId total = -1;
    if (parts.state_sum >= 0) total = t.scale(parts.state_sum, alpha * inv);
    if (parts.action_sum >= 0) {
      NodeId p = t.scale(parts.action_sum, inv);
      total = total < 0 ? p : t.add(total, p);
    }
    if (total < 0) throw UsageError("combine_loss: no loss terms");
    return total;
  }

  // ------------------------------------------------------------------
  // Value-level losses (build a throwaway tape).
  // ------------------------------------------------------------------

  // Mean over triplets of |T(f(o_t), g(a_t)) - f(o_{t+1})|^2.
  S loss_forward(const Tensor<S>& obs_t, const std::vector<std::int32_t>& actions,
                 const Tensor<S>& obs_next) const {
    Tape<S> t;
    Bound b = bind(t);
    LossParts parts = build_forward_loss(t, b, obs_t, actions, obs_next);
    return t.value(parts.state_sum).item() / static_cast<S>(parts.steps);
  }

  // Mean over steps of |a_hat - g(a_t)|^2 + CE(decode(a_hat), a_t), with
  // ground-truth states and previous actions.
  S loss_conjugate(const SeqBatch<S>& batch) const {
    Tape<S> t;
    Bound b = bind(t);
    LossParts parts = build_rollout(t, b, batch, RolloutMode::kTeacherForce);
    return t.value(parts.action_sum).item() / static_cast<S>(parts.steps);
  }

  // Combined rollout loss for one sequence: alpha * L_T + L_P.
  S training_rollout(const SeqBatch<S>& seq) const {
    Tape<S> t;
    Bound b = bind(t);
    RolloutMode mode = cfg_.teacher_forcing ? RolloutMode::kTeacherForce : RolloutMode::kCrossFeed;
    LossParts parts = build_rollout(t, b, seq, mode);
    return t.value(combine_loss(t, parts, static_cast<S>(cfg_.alpha))).item();
  }

 private:
  void require_latent(const Tensor<S>& v, const char* op) const {
    if (v.numel() != cfg_.latent_dim || v.rank() != 1) {
      throw DimError(std::string(op) + ": expected latent vector of length " +
                     std::to_string(cfg_.latent_dim) + ", got " + v.shape_str());
    }
  }

  void init_params(std::uint64_t seed) {
    Rng rng(seed);
    auto uniform_fan_in = [&](Tensor<S>& w, std::size_t fan_in) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
      for (std::size_t i = 0; i < w.numel(); ++i) {
        w[i] = static_cast<S>(rng.uniform(-bound, bound));
      }
    };
    uniform_fan_in(f_w1_, f_w1_.rows());
    uniform_fan_in(f_w2_, f_w2_.rows());
    uniform_fan_in(g_table_, cfg_.latent_dim);
    uniform_fan_in(h_w_, h_w_.rows());
    uniform_fan_in(t_w1_, t_w1_.rows());
    uniform_fan_in(t_w2_, t_w2_.rows());
    uniform_fan_in(p_w1_, p_w1_.rows());
    uniform_fan_in(p_w2_, p_w2_.rows());
    // Biases start at zero.
  }

  ModelConfig cfg_;
  Tensor<S> f_w1_, f_b1_, f_w2_, f_b2_;
  Tensor<S> g_table_;
  Tensor<S> h_w_, h_b_;
  Tensor<S> t_w1_, t_b1_, t_w2_, t_b2_;
  Tensor<S> p_w1_, p_b1_, p_w2_, p_b2_;
};

}  // namespace ddn
