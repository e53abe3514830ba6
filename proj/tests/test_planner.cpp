#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include "ddn/model.hpp"
#include "ddn/planner.hpp"
#include "ddn/rng.hpp"

using ddn::BeamNode;
using ddn::DdnModel;
using ddn::ModelConfig;
using ddn::PlannerConfig;
using ddn::Rng;
using ddn::Tensor;

namespace {

ModelConfig planner_config(std::size_t actions, std::size_t d = 6, std::size_t latent = 8) {
  ModelConfig cfg;
  cfg.feature_dim = d;
  cfg.latent_dim = latent;
  cfg.hidden_dim = latent;
  cfg.num_actions = actions;
  return cfg;
}

Tensor<float> random_vec(Rng& rng, std::size_t n) {
  Tensor<float> v({n});
  for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<float>(rng.uniform(-1, 1));
  return v;
}

// Exhaustive minimum of |x_H - x_goal|^2 over all A^H action sequences.
template <typename M>
std::pair<double, std::vector<std::int32_t>> brute_force(const M& model,
                                                         const Tensor<float>& obs_t,
                                                         const Tensor<float>& obs_goal,
                                                         std::size_t horizon) {
  const std::size_t num_actions = model.num_actions();
  const Tensor<float> goal = model.encode_state(obs_goal);
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::int32_t> best_seq;
  std::vector<std::int32_t> seq(horizon, 0);
  while (true) {
    Tensor<float> x = model.encode_state(obs_t);
    for (std::int32_t a : seq) x = model.forward_step(x, model.embed_action(a));
    const double d = ddn::latent_sqdist(x, goal);
    if (d < best) {
      best = d;
      best_seq = seq;
    }
    std::size_t pos = 0;
    while (pos < horizon) {
      if (++seq[pos] < static_cast<std::int32_t>(num_actions)) break;
      seq[pos] = 0;
      ++pos;
    }
    if (pos == horizon) break;
  }
  return {best, best_seq};
}

// Deterministic latent MDP with a uniform proposal model: encode is the
// identity, actions add fixed offset vectors, the decoder is flat.
struct UniformMdpModel {
  std::size_t actions;
  std::size_t dim;
  std::vector<Tensor<float>> offsets;

  UniformMdpModel(std::size_t a, std::size_t d, std::uint64_t seed) : actions(a), dim(d) {
    Rng rng(seed);
    for (std::size_t i = 0; i <= a; ++i) offsets.push_back(random_vec(rng, d));
  }

  std::size_t latent_dim() const { return dim; }
  std::size_t num_actions() const { return actions; }
  std::int32_t start_token() const { return static_cast<std::int32_t>(actions); }
  Tensor<float> encode_state(const Tensor<float>& obs) const { return obs; }
  Tensor<float> embed_action(std::int32_t id) const { return offsets[static_cast<std::size_t>(id)]; }
  Tensor<float> decode_action(const Tensor<float>&) const {
    return Tensor<float>({actions}, 1.0f / static_cast<float>(actions));
  }
  Tensor<float> forward_step(const Tensor<float>& x, const Tensor<float>& abar) const {
    Tensor<float> out = x;
    for (std::size_t i = 0; i < dim; ++i) out[i] = 0.5f * out[i] + abar[i];
    return out;
  }
  Tensor<float> zero_hidden() const { return Tensor<float>({2, dim}); }
  std::pair<Tensor<float>, Tensor<float>> conjugate_step(const Tensor<float>&,
                                                         const Tensor<float>&,
                                                         const Tensor<float>&,
                                                         const Tensor<float>& hidden) const {
    return {Tensor<float>({dim}), hidden};
  }
};

}  // namespace

TEST_CASE("default iteration budget is 20 per horizon step") {
  PlannerConfig cfg;
  cfg.horizon = 3;
  CHECK(cfg.iterations_or_default() == 60);
}

TEST_CASE("wide beam search equals exhaustive search") {
  // A=4, H=3, eta=64, beta=200: every one of the 64 sequences is explored.
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    DdnModel<float> model(planner_config(4), seed);
    Rng rng(seed + 100);
    const auto obs_t = random_vec(rng, 6);
    const auto obs_g = random_vec(rng, 6);

    PlannerConfig cfg;
    cfg.horizon = 3;
    cfg.beam_width = 64;
    cfg.max_iterations = 200;
    const auto result = ddn::plan(model, obs_t, obs_g, cfg);
    const auto [best, best_seq] = brute_force(model, obs_t, obs_g, 3);
    REQUIRE_THAT(result.terminal_distance, Catch::Matchers::WithinAbs(best, 1e-6));
  }
}

TEST_CASE("beam of one with single proposals is the greedy rollout") {
  DdnModel<float> model(planner_config(5), 3);
  Rng rng(4);
  const auto obs_t = random_vec(rng, 6);
  const auto obs_g = random_vec(rng, 6);

  PlannerConfig cfg;
  cfg.horizon = 4;
  cfg.beam_width = 1;
  cfg.branching = 1;
  cfg.max_iterations = 4;  // beta = H suffices for the single chain
  const auto beam = ddn::plan(model, obs_t, obs_g, cfg);
  const auto greedy = ddn::greedy_plan(model, obs_t, obs_g, 4);
  CHECK(beam.actions == greedy.actions);
  CHECK(beam.terminal_distance == greedy.terminal_distance);
}

TEST_CASE("backtrack recovers the construction chain") {
  std::vector<BeamNode> nodes;
  const Tensor<float> x({2});
  const Tensor<float> h({2, 2});
  nodes.push_back({x, h, 99, -1, 0, 0.0, 0});
  nodes.push_back({x, h, 2, 0, 1, 0.0, 1});
  nodes.push_back({x, h, 0, 1, 2, 0.0, 2});
  nodes.push_back({x, h, 1, 2, 3, 0.0, 3});
  CHECK(ddn::backtrack(nodes, 3) == std::vector<std::int32_t>{2, 0, 1});
  CHECK(ddn::backtrack(nodes, 3, 3) == std::vector<std::int32_t>{2, 0, 1});
  CHECK(ddn::backtrack(nodes, 0).empty());
  CHECK_THROWS_AS(ddn::backtrack(nodes, 3, 2), ddn::Error);
}

TEST_CASE("planned states start at the encoded current observation") {
  DdnModel<float> model(planner_config(4), 5);
  Rng rng(6);
  const auto obs_t = random_vec(rng, 6);
  const auto obs_g = random_vec(rng, 6);
  PlannerConfig cfg;
  cfg.horizon = 3;
  const auto result = ddn::plan(model, obs_t, obs_g, cfg);
  REQUIRE(result.actions.size() == 3);
  REQUIRE(result.states.size() == 4);
  const auto x0 = model.encode_state(obs_t);
  for (std::size_t i = 0; i < x0.numel(); ++i) REQUIRE(result.states[0][i] == x0[i]);
}

TEST_CASE("planner never emits an out-of-range action id") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    DdnModel<float> model(planner_config(3), seed);
    Rng rng(seed);
    PlannerConfig cfg;
    cfg.horizon = 4;
    const auto result = ddn::plan(model, random_vec(rng, 6), random_vec(rng, 6), cfg);
    for (const std::int32_t a : result.actions) {
      REQUIRE(a >= 0);
      REQUIRE(a < 3);
    }
  }
}

TEST_CASE("wider beams never end farther from the goal") {
  // Budget large enough that every beam runs to exhaustion.
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    DdnModel<float> model(planner_config(4), seed + 40);
    Rng rng(seed + 900);
    const auto obs_t = random_vec(rng, 6);
    const auto obs_g = random_vec(rng, 6);
    double prev = std::numeric_limits<double>::infinity();
    for (const std::size_t eta : {std::size_t{1}, std::size_t{5}, std::size_t{20},
                                  std::size_t{64}}) {
      PlannerConfig cfg;
      cfg.horizon = 3;
      cfg.beam_width = eta;
      cfg.max_iterations = 100000;
      const double d = ddn::plan(model, obs_t, obs_g, cfg).terminal_distance;
      REQUIRE(d <= prev + 1e-12);
      prev = d;
    }
  }
}

TEST_CASE("uniform proposals with a full-width beam are exhaustive-complete") {
  UniformMdpModel model(3, 5, 11);
  Rng rng(12);
  const auto obs_t = random_vec(rng, 5);
  const auto obs_g = random_vec(rng, 5);

  PlannerConfig cfg;
  cfg.horizon = 3;
  cfg.beam_width = 27;  // A^H
  cfg.max_iterations = 100000;
  cfg.uniform_proposals = true;
  cfg.branching = 3;
  const auto result = ddn::plan(model, obs_t, obs_g, cfg);
  const auto [best, best_seq] = brute_force(model, obs_t, obs_g, 3);
  CHECK(result.terminal_distance == best);
  CHECK(result.actions == best_seq);
}

TEST_CASE("identical queries produce identical plans") {
  DdnModel<float> model(planner_config(6), 21);
  Rng rng(22);
  const auto obs_t = random_vec(rng, 6);
  const auto obs_g = random_vec(rng, 6);
  PlannerConfig cfg;
  cfg.horizon = 3;
  const auto a = ddn::plan(model, obs_t, obs_g, cfg);
  const auto b = ddn::plan(model, obs_t, obs_g, cfg);
  CHECK(a.actions == b.actions);
  CHECK(a.terminal_distance == b.terminal_distance);
  CHECK(a.iterations == b.iterations);
}

TEST_CASE("propose_actions returns a sorted action distribution") {
  DdnModel<float> model(planner_config(7), 23);
  Rng rng(24);
  const auto x = random_vec(rng, 8);
  const auto goal = random_vec(rng, 8);
  const auto prev = model.embed_action(model.start_token());

  const auto all = ddn::propose_actions(model, x, prev, goal, model.zero_hidden(), 7);
  REQUIRE(all.size() == 7);
  std::vector<bool> seen(7, false);
  for (std::size_t i = 0; i < all.size(); ++i) {
    seen[static_cast<std::size_t>(all[i].first)] = true;
    if (i) REQUIRE(all[i].second <= all[i - 1].second);
  }
  for (bool s : seen) REQUIRE(s);

  // k is clamped to the action count.
  CHECK(ddn::propose_actions(model, x, prev, goal, model.zero_hidden(), 99).size() == 7);
  CHECK_THROWS_AS(ddn::propose_actions(model, x, prev, goal, model.zero_hidden(), 0),
                  ddn::UsageError);
}

TEST_CASE("invalid planner configurations are rejected") {
  DdnModel<float> model(planner_config(4), 25);
  Rng rng(26);
  const auto obs = random_vec(rng, 6);

  PlannerConfig cfg;
  cfg.horizon = 0;
  CHECK_THROWS_AS(ddn::plan(model, obs, obs, cfg), ddn::UsageError);

  cfg.horizon = 3;
  cfg.beam_width = 0;
  CHECK_THROWS_AS(ddn::plan(model, obs, obs, cfg), ddn::UsageError);

  cfg = PlannerConfig{};
  cfg.horizon = 3;
  cfg.goal_eps = -1.0;
  CHECK_THROWS_AS(ddn::plan(model, obs, obs, cfg), ddn::UsageError);
}

TEST_CASE("a budget below the horizon cannot produce a full plan") {
  DdnModel<float> model(planner_config(4), 27);
  Rng rng(28);
  PlannerConfig cfg;
  cfg.horizon = 5;
  cfg.max_iterations = 3;
  CHECK_THROWS_WITH(ddn::plan(model, random_vec(rng, 6), random_vec(rng, 6), cfg),
                    Catch::Matchers::ContainsSubstring("budget too small"));
}

TEST_CASE("stochastic proposals are reproducible under a fixed seed") {
  DdnModel<float> model(planner_config(6), 29);
  Rng rng(30);
  const auto obs_t = random_vec(rng, 6);
  const auto obs_g = random_vec(rng, 6);
  PlannerConfig cfg;
  cfg.horizon = 3;
  cfg.stochastic = true;
  cfg.temperature = 2.0;
  cfg.sample_seed = 7;
  const auto a = ddn::plan(model, obs_t, obs_g, cfg);
  const auto b = ddn::plan(model, obs_t, obs_g, cfg);
  CHECK(a.actions == b.actions);
  for (const std::int32_t id : a.actions) {
    REQUIRE(id >= 0);
    REQUIRE(id < 6);
  }
}
