#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ddn/baselines.hpp"
#include "ddn/metrics.hpp"
#include "ddn/synth.hpp"
#include "ddn/train.hpp"

using ddn::DdnModel;
using ddn::ModelConfig;
using ddn::RetrievalIndex;
using ddn::Rng;
using ddn::Tensor;

namespace {

ModelConfig tiny_config(std::size_t d, std::size_t actions) {
  ModelConfig cfg;
  cfg.feature_dim = d;
  cfg.latent_dim = 8;
  cfg.hidden_dim = 8;
  cfg.num_actions = actions;
  return cfg;
}

}  // namespace

TEST_CASE("random plans stay inside the action range") {
  Rng rng(0);
  for (int t = 0; t < 100; ++t) {
    const auto plan = ddn::random_plan(4, 7, rng);
    REQUIRE(plan.size() == 4);
    for (const std::int32_t a : plan) {
      REQUIRE(a >= 0);
      REQUIRE(a < 7);
    }
  }
  CHECK_THROWS_AS(ddn::random_plan(0, 7, rng), ddn::UsageError);
}

TEST_CASE("random-policy success matches the analytic rate") {
  // Matched-pair evaluation: two independent uniform plans agree with
  // probability A^-H. A=12, H=3 over 1e5 trials, tolerance 3 standard errors.
  const std::size_t num_actions = 12, horizon = 3;
  const double p = std::pow(1.0 / static_cast<double>(num_actions),
                            static_cast<double>(horizon));
  const int trials = 100000;
  Rng rng(1);
  int hits = 0;
  for (int t = 0; t < trials; ++t) {
    const auto pred = ddn::random_plan(horizon, num_actions, rng);
    const auto gt = ddn::random_plan(horizon, num_actions, rng);
    hits += pred == gt;
  }
  const double se = std::sqrt(p * (1 - p) / trials);
  CHECK(std::abs(static_cast<double>(hits) / trials - p) <= 3 * se);
}

TEST_CASE("retrieval returns the exact stored plan for a stored query") {
  const auto schema = ddn::synth::sample_task(2, 6, 6, 3, 3);
  const auto renderer = ddn::synth::make_renderer(3, 12, 6, 0.0f);  // noise-free
  const auto data = ddn::synth::make_dataset(schema, renderer, 20, 4);

  DdnModel<float> model(tiny_config(12, 6), 5);
  const auto index = RetrievalIndex::build(data.train, model);
  CHECK(index.size() == data.train.seqs.size());

  for (const auto& seq : data.train.seqs) {
    const auto plan =
        index.plan(seq.observation(0), seq.observation(seq.length() - 1), model, 3);
    // Identical endpoints can legitimately retrieve a different sequence, but
    // at sigma=0 with unique demos the exact pair is its own nearest key.
    CHECK(plan == seq.actions);
  }
}

TEST_CASE("a single-entry index always answers with that entry") {
  ddn::Dataset train;
  train.feature_dim = 4;
  train.num_actions = 3;
  ddn::Sequence s;
  s.obs = Tensor<float>::matrix({{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}});
  s.actions = {2, 1};
  train.seqs.push_back(s);

  DdnModel<float> model(tiny_config(4, 3), 6);
  const auto index = RetrievalIndex::build(train, model);
  const auto plan = index.plan(Tensor<float>({4}, 9.0f), Tensor<float>({4}, -9.0f), model, 2);
  CHECK(plan == std::vector<std::int32_t>{2, 1});
}

TEST_CASE("retrieval ties break toward the lowest stored index") {
  ddn::Dataset train;
  train.feature_dim = 2;
  train.num_actions = 4;
  for (int i = 0; i < 2; ++i) {
    ddn::Sequence s;
    s.obs = Tensor<float>::matrix({{1, 1}, {2, 2}});  // identical keys
    s.actions = {i};
    train.seqs.push_back(s);
  }
  DdnModel<float> model(tiny_config(2, 4), 7);
  const auto index = RetrievalIndex::build(train, model);
  const auto plan = index.plan(Tensor<float>({2}, 1.0f), Tensor<float>({2}, 2.0f), model, 1);
  CHECK(plan == std::vector<std::int32_t>{0});
}

TEST_CASE("retrieval refuses to adapt a mismatched horizon") {
  ddn::Dataset train;
  train.feature_dim = 2;
  train.num_actions = 4;
  ddn::Sequence s;
  s.obs = Tensor<float>::matrix({{1, 1}, {2, 2}, {3, 3}});
  s.actions = {0, 1};
  train.seqs.push_back(s);
  DdnModel<float> model(tiny_config(2, 4), 8);
  const auto index = RetrievalIndex::build(train, model);
  CHECK_THROWS_WITH(index.plan(Tensor<float>({2}, 1.0f), Tensor<float>({2}, 2.0f), model, 3),
                    Catch::Matchers::ContainsSubstring("horizon"));
}

TEST_CASE("raw-feature retrieval keys skip the encoder") {
  ddn::Dataset train;
  train.feature_dim = 2;
  train.num_actions = 2;
  for (int i = 0; i < 2; ++i) {
    ddn::Sequence s;
    const float v = i == 0 ? 0.0f : 5.0f;
    s.obs = Tensor<float>::matrix({{v, v}, {v + 1, v + 1}});
    s.actions = {i};
    train.seqs.push_back(s);
  }
  DdnModel<float> model(tiny_config(2, 2), 9);
  const auto index = RetrievalIndex::build(train, model, /*raw_features=*/true);
  const auto plan = index.plan(Tensor<float>({2}, 5.1f), Tensor<float>({2}, 6.0f), model, 1);
  CHECK(plan == std::vector<std::int32_t>{1});
}

TEST_CASE("the recurrent policy emits a deterministic fixed-length plan") {
  DdnModel<float> model(tiny_config(6, 5), 10);
  Rng rng(11);
  Tensor<float> o_t({6}), o_g({6});
  for (std::size_t i = 0; i < 6; ++i) {
    o_t[i] = static_cast<float>(rng.uniform(-1, 1));
    o_g[i] = static_cast<float>(rng.uniform(-1, 1));
  }
  const auto a = ddn::rnn_policy_plan(model, o_t, o_g, 4);
  const auto b = ddn::rnn_policy_plan(model, o_t, o_g, 4);
  REQUIRE(a.size() == 4);
  CHECK(a == b);
  for (const std::int32_t id : a) {
    REQUIRE(id >= 0);
    REQUIRE(id < 5);
  }
}

TEST_CASE("a conjugate-only model imitates its training sequences") {
  const auto schema = ddn::synth::sample_task(3, 6, 6, 3, 3);
  const auto renderer = ddn::synth::make_renderer(4, 12, 6, 0.0f);
  auto data = ddn::synth::make_dataset(schema, renderer, 15, 5);
  data.train.seqs.resize(8);

  ModelConfig mc = tiny_config(12, 6);
  mc.latent_dim = 16;
  mc.hidden_dim = 16;
  DdnModel<float> model(mc, 12);
  ddn::TrainConfig tc;
  tc.epochs = 250;
  tc.batch_size = 8;
  tc.lr = 5e-3f;
  tc.val_fraction = 0.0;
  tc.ablation = ddn::Ablation::kNoForward;
  ddn::train(model, data.train, tc);

  std::size_t hits = 0;
  for (const auto& seq : data.train.seqs) {
    const auto plan = ddn::rnn_policy_plan(model, seq.observation(0),
                                           seq.observation(seq.length() - 1), seq.horizon());
    hits += plan == seq.actions;
  }
  CHECK(hits == data.train.seqs.size());
}
