#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <utility>
#include <vector>

#include "ddn/errors.hpp"
#include "ddn/rng.hpp"
#include "ddn/tensor.hpp"

namespace ddn {

// Anything the planner and walkthrough search need from a trained model.
// Satisfied by DdnModel<float>; tests also drive the search with hand-built
// dynamics.
template <typename M>
concept LatentModel = requires(const M& m, const Tensor<float>& v, std::int32_t id) {
  { m.latent_dim() } -> std::convertible_to<std::size_t>;
  { m.num_actions() } -> std::convertible_to<std::size_t>;
  { m.start_token() } -> std::convertible_to<std::int32_t>;
  { m.encode_state(v) } -> std::convertible_to<Tensor<float>>;
  { m.embed_action(id) } -> std::convertible_to<Tensor<float>>;
  { m.decode_action(v) } -> std::convertible_to<Tensor<float>>;
  { m.forward_step(v, v) } -> std::convertible_to<Tensor<float>>;
  { m.zero_hidden() } -> std::convertible_to<Tensor<float>>;
  {
    m.conjugate_step(v, v, v, v)
  } -> std::convertible_to<std::pair<Tensor<float>, Tensor<float>>>;
};

struct PlannerConfig {
  std::size_t horizon = 3;          // H: plan length
  std::size_t max_iterations = 0;   // beta: node expansions; 0 -> 20 * H
  std::size_t beam_width = 20;      // eta: open nodes kept per iteration
  double goal_eps = 1e-5;           // epsilon: squared-distance early stop
  std::size_t branching = 0;        // k_b: proposals per expansion; 0 -> min(A, 20)
  bool uniform_proposals = false;   // expand every action with equal probability
  bool stochastic = false;          // sample proposals instead of top-k
  double temperature = 1.0;
  std::uint64_t sample_seed = 0;

  std::size_t iterations_or_default() const {
    return max_iterations ? max_iterations : 20 * horizon;
  }

  std::size_t branching_for(std::size_t num_actions) const {
    const std::size_t kb = branching ? branching : std::min<std::size_t>(num_actions, 20);
    return std::min(kb, num_actions);
  }

  void validate(std::size_t num_actions) const {
    if (horizon < 1) throw UsageError("planner: horizon must be >= 1");
    if (iterations_or_default() < 1) throw UsageError("planner: max_iterations must be >= 1");
    if (beam_width < 1) throw UsageError("planner: beam width must be >= 1");
    if (branching_for(num_actions) < 1) throw UsageError("planner: branching must be >= 1");
    if (goal_eps < 0) throw UsageError("planner: goal threshold must be >= 0");
    if (temperature <= 0) throw UsageError("planner: temperature must be positive");
  }
};

struct BeamNode {
  Tensor<float> x;          // latent state
  Tensor<float> hidden;     // conjugate recurrent state to use when expanding
  std::int32_t action;      // action taken to reach this node (start token at root)
  std::int32_t parent;      // arena index, -1 at root
  std::uint32_t depth;
  double priority;          // squared L2 distance to the goal latent
  std::uint64_t order;      // insertion id; breaks priority ties
};

struct PlanResult {
  std::vector<std::int32_t> actions;   // length H
  std::vector<Tensor<float>> states;   // H+1 latents; states[0] = f(o_t)
  double terminal_distance = 0.0;      // squared L2 at the chosen depth-H node
  std::size_t iterations = 0;          // expansions performed
};

inline double latent_sqdist(const Tensor<float>& a, const Tensor<float>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    acc += d * d;
  }
  return acc;
}

// Top-k action ids by probability, descending, ties to the smaller id.
inline std::vector<std::pair<std::int32_t, float>> top_k_actions(const Tensor<float>& probs,
                                                                 std::size_t k) {
  std::vector<std::pair<std::int32_t, float>> all(probs.numel());
  for (std::size_t i = 0; i < probs.numel(); ++i) {
    all[i] = {static_cast<std::int32_t>(i), probs[i]};
  }
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  all.resize(std::min(k, all.size()));
  return all;
}

// Proposal distribution for expanding one node: the decoded probabilities of
// the conjugate model's predicted latent action.
template <LatentModel M>
std::vector<std::pair<std::int32_t, float>> propose_actions(const M& model,
                                                            const Tensor<float>& x,
                                                            const Tensor<float>& abar_prev,
                                                            const Tensor<float>& x_goal,
                                                            const Tensor<float>& hidden,
                                                            std::size_t k) {
  if (k < 1) throw UsageError("propose_actions: k must be >= 1");
  auto [abar_hat, next_hidden] = model.conjugate_step(x, abar_prev, x_goal, hidden);
  (void)next_hidden;
  return top_k_actions(model.decode_action(abar_hat), k);
}

namespace detail {

inline std::vector<std::pair<std::int32_t, float>> sample_k_actions(const Tensor<float>& probs,
                                                                    std::size_t k,
                                                                    double temperature,
                                                                    Rng& rng) {
  // Gumbel top-k on tempered log-probabilities: k distinct draws.
  std::vector<std::pair<double, std::int32_t>> keyed(probs.numel());
  for (std::size_t i = 0; i < probs.numel(); ++i) {
    const double logp = std::log(std::max(1e-30, static_cast<double>(probs[i]))) / temperature;
    const double gumbel = -std::log(-std::log(std::max(1e-300, rng.uniform())));
    keyed[i] = {logp + gumbel, static_cast<std::int32_t>(i)};
  }
  std::sort(keyed.begin(), keyed.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<std::pair<std::int32_t, float>> out;
  for (std::size_t i = 0; i < std::min(k, keyed.size()); ++i) {
    out.emplace_back(keyed[i].second, probs[static_cast<std::size_t>(keyed[i].second)]);
  }
  return out;
}

}  // namespace detail

// Actions along the parent chain, root-first.
inline std::vector<std::int32_t> backtrack(const std::vector<BeamNode>& nodes, std::int32_t idx) {
  std::vector<std::int32_t> actions;
  for (std::int32_t i = idx; nodes[static_cast<std::size_t>(i)].parent >= 0;
       i = nodes[static_cast<std::size_t>(i)].parent) {
    actions.push_back(nodes[static_cast<std::size_t>(i)].action);
  }
  std::reverse(actions.begin(), actions.end());
  return actions;
}

inline std::vector<std::int32_t> backtrack(const std::vector<BeamNode>& nodes, std::int32_t idx,
                                           std::size_t expected_depth) {
  if (nodes[static_cast<std::size_t>(idx)].depth != expected_depth) {
    throw Error("backtrack: node depth " +
                std::to_string(nodes[static_cast<std::size_t>(idx)].depth) +
                " != expected " + std::to_string(expected_depth));
  }
  return backtrack(nodes, idx);
}

// Sampling-based forward beam search in the latent space. Pops the open node
// closest to the goal, expands it with its top proposals through the forward
// dynamics, and keeps the best `beam_width` open nodes. Depth is capped at H;
// the best depth-H node wins. Deterministic: all ties break on insertion id.
template <LatentModel M>
PlanResult plan(const M& model, const Tensor<float>& obs_t, const Tensor<float>& obs_goal,
                const PlannerConfig& cfg) {
  const std::size_t num_actions = model.num_actions();
  cfg.validate(num_actions);
  const std::size_t horizon = cfg.horizon;
  const std::size_t beta = cfg.iterations_or_default();
  const std::size_t kb = cfg.branching_for(num_actions);

  const Tensor<float> x0 = model.encode_state(obs_t);
  const Tensor<float> x_goal = model.encode_state(obs_goal);
  Rng sample_rng(cfg.sample_seed);

  std::vector<BeamNode> nodes;
  nodes.push_back(BeamNode{x0, model.zero_hidden(), model.start_token(), -1, 0,
                           latent_sqdist(x0, x_goal), 0});
  std::uint64_t next_order = 1;

  std::vector<std::int32_t> open{0};
  std::int32_t best_terminal = -1;

  const auto better = [&](std::int32_t a, std::int32_t b) {
    const BeamNode& na = nodes[static_cast<std::size_t>(a)];
    const BeamNode& nb = nodes[static_cast<std::size_t>(b)];
    if (na.priority != nb.priority) return na.priority < nb.priority;
    return na.order < nb.order;
  };

  std::size_t iterations = 0;
  while (iterations < beta && !open.empty()) {
    const auto best_it = std::min_element(open.begin(), open.end(), better);
    const std::int32_t cur = *best_it;
    open.erase(best_it);
    ++iterations;

    const BeamNode& node = nodes[static_cast<std::size_t>(cur)];
    auto [abar_hat, next_hidden] =
        model.conjugate_step(node.x, model.embed_action(node.action), x_goal, node.hidden);

    std::vector<std::pair<std::int32_t, float>> proposals;
    if (cfg.uniform_proposals) {
      proposals.reserve(num_actions);
      const float p = 1.0f / static_cast<float>(num_actions);
      for (std::size_t a = 0; a < num_actions; ++a) {
        proposals.emplace_back(static_cast<std::int32_t>(a), p);
      }
    } else {
      const Tensor<float> probs = model.decode_action(abar_hat);
      proposals = cfg.stochastic ? detail::sample_k_actions(probs, kb, cfg.temperature, sample_rng)
                                 : top_k_actions(probs, kb);
    }

    for (const auto& [action, prob] : proposals) {
      (void)prob;
      const Tensor<float> x_next =
          model.forward_step(nodes[static_cast<std::size_t>(cur)].x, model.embed_action(action));
      BeamNode child{x_next, next_hidden, action, cur,
                     nodes[static_cast<std::size_t>(cur)].depth + 1,
                     latent_sqdist(x_next, x_goal), next_order++};
      nodes.push_back(std::move(child));
      const auto idx = static_cast<std::int32_t>(nodes.size() - 1);
      if (nodes.back().depth == horizon) {
        if (best_terminal < 0 || better(idx, best_terminal)) best_terminal = idx;
      } else {
        open.push_back(idx);
      }
    }

    if (best_terminal >= 0 &&
        nodes[static_cast<std::size_t>(best_terminal)].priority <= cfg.goal_eps) {
      break;
    }

    if (open.size() > cfg.beam_width) {
      std::sort(open.begin(), open.end(), better);
      open.resize(cfg.beam_width);
    }
  }

  if (best_terminal < 0) {
    throw UsageError("plan: budget too small, no depth-" + std::to_string(horizon) +
                     " node within " + std::to_string(beta) + " iterations");
  }

  PlanResult result;
  result.actions = backtrack(nodes, best_terminal, horizon);
  result.terminal_distance = nodes[static_cast<std::size_t>(best_terminal)].priority;
  result.iterations = iterations;
  result.states.reserve(horizon + 1);
  std::vector<std::int32_t> chain;
  for (std::int32_t i = best_terminal; i >= 0; i = nodes[static_cast<std::size_t>(i)].parent) {
    chain.push_back(i);
  }
  for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
    result.states.push_back(nodes[static_cast<std::size_t>(*it)].x);
  }
  return result;
}

// Greedy argmax rollout of the conjugate model through the forward dynamics;
// equals plan() with beam width 1, branching 1 and beta = H.
template <LatentModel M>
PlanResult greedy_plan(const M& model, const Tensor<float>& obs_t, const Tensor<float>& obs_goal,
                       std::size_t horizon) {
  if (horizon < 1) throw UsageError("greedy_plan: horizon must be >= 1");
  PlanResult result;
  Tensor<float> x = model.encode_state(obs_t);
  const Tensor<float> x_goal = model.encode_state(obs_goal);
  Tensor<float> hidden = model.zero_hidden();
  std::int32_t prev = model.start_token();
  result.states.push_back(x);
  for (std::size_t t = 0; t < horizon; ++t) {
    auto [abar_hat, next_hidden] =
        model.conjugate_step(x, model.embed_action(prev), x_goal, hidden);
    hidden = std::move(next_hidden);
    const auto top = top_k_actions(model.decode_action(abar_hat), 1);
    prev = top.front().first;
    x = model.forward_step(x, model.embed_action(prev));
    result.actions.push_back(prev);
    result.states.push_back(x);
  }
  result.terminal_distance = latent_sqdist(x, x_goal);
  result.iterations = horizon;
  return result;
}

}  // namespace ddn
