#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <functional>
#include <vector>

#include "ddn/adam.hpp"
#include "ddn/gradcheck.hpp"
#include "ddn/graph.hpp"
#include "ddn/rng.hpp"
#include "ddn/tensor.hpp"

using ddn::Rng;
using ddn::Tape;
using ddn::Tensor;

namespace {

Tensor<double> random_tensor(Rng& rng, std::vector<std::size_t> shape, double scale = 1.0) {
  Tensor<double> t(std::move(shape));
  for (std::size_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(-scale, scale);
  return t;
}

// Central finite differences on a seeded sample of entries; small tensors are
// checked exhaustively.
double sampled_fd_error(std::vector<Tensor<double>*> params,
                        const std::function<double()>& loss,
                        const std::function<std::vector<Tensor<double>>()>& analytic,
                        Rng& rng, double step = 1e-5) {
  const std::vector<Tensor<double>> grads = analytic();
  double worst = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor<double>& p = *params[k];
    std::vector<std::size_t> entries;
    if (p.numel() <= 128) {
      for (std::size_t i = 0; i < p.numel(); ++i) entries.push_back(i);
    } else {
      for (int i = 0; i < 128; ++i) entries.push_back(rng.below(p.numel()));
    }
    for (std::size_t i : entries) {
      const double keep = p[i];
      p[i] = keep + step;
      const double up = loss();
      p[i] = keep - step;
      const double down = loss();
      p[i] = keep;
      const double numeric = (up - down) / (2.0 * step);
      worst = std::max(worst, ddn::relative_error(grads[k][i], numeric));
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("mse gradient is 2x/n") {
  Tape<double> t;
  auto x = t.param(Tensor<double>::vec({3.0}));
  auto loss = t.mse(x, t.input(Tensor<double>::vec({0.0})));
  t.backward(loss);
  CHECK(t.grad(x)[0] == 6.0);
}

TEST_CASE("constant loss leaves parameter gradients at zero") {
  Tape<double> t;
  auto x = t.param(Tensor<double>::vec({1.0, 2.0}));
  auto loss = t.input(Tensor<double>::scalar(5.0));
  t.backward(loss);
  CHECK(t.grad(x)[0] == 0.0);
  CHECK(t.grad(x)[1] == 0.0);
}

TEST_CASE("backward requires a scalar loss") {
  Tape<double> t;
  auto x = t.param(Tensor<double>::vec({1.0, 2.0}));
  CHECK_THROWS_AS(t.backward(x), ddn::UsageError);
}

TEST_CASE("every primitive matches central finite differences") {
  // Randomized shapes up to 64x64, 20 seeds, 64-bit.
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const std::size_t m = 1 + rng.below(64), k = 1 + rng.below(8), n = 1 + rng.below(64);

    SECTION("seed " + std::to_string(seed)) {
      auto a = random_tensor(rng, {m, k});
      auto b = random_tensor(rng, {k, n});
      auto bias = random_tensor(rng, {n});
      auto target = random_tensor(rng, {m, n});
      std::vector<std::int32_t> labels(m);
      for (auto& l : labels) l = static_cast<std::int32_t>(rng.below(n));
      auto table = random_tensor(rng, {5, k});
      std::vector<std::int32_t> ids(m);
      for (auto& id : ids) id = static_cast<std::int32_t>(rng.below(5));

      struct Case {
        const char* name;
        std::vector<Tensor<double>*> params;
        std::function<Tape<double>::NodeId(Tape<double>&, std::vector<Tape<double>::NodeId>&)>
            build;
      };
      std::vector<Case> cases;
      cases.push_back({"matmul", {&a, &b}, [&](Tape<double>& t, auto& p) {
                         return t.mse(t.matmul(p[0], p[1]), t.input(target));
                       }});
      cases.push_back({"affine", {&a, &b, &bias}, [&](Tape<double>& t, auto& p) {
                         return t.mse(t.affine(p[0], p[1], p[2]), t.input(target));
                       }});
      cases.push_back({"relu", {&a, &b}, [&](Tape<double>& t, auto& p) {
                         return t.mse(t.relu(t.matmul(p[0], p[1])), t.input(target));
                       }});
      cases.push_back({"tanh", {&a, &b}, [&](Tape<double>& t, auto& p) {
                         return t.mse(t.tanh(t.matmul(p[0], p[1])), t.input(target));
                       }});
      cases.push_back({"concat+scale", {&a, &b}, [&](Tape<double>& t, auto& p) {
                         auto c = t.concat_cols(t.scale(p[0], 0.5), p[0]);
                         auto tgt = t.input(random_tensor(rng, {m, 2 * k}));
                         (void)p;
                         return t.mse(c, tgt);
                       }});
      cases.push_back({"add", {&a, &b}, [&](Tape<double>& t, auto& p) {
                         return t.mse(t.add(t.matmul(p[0], p[1]), t.matmul(p[0], p[1])),
                                      t.input(target));
                       }});
      cases.push_back({"gather", {&table}, [&](Tape<double>& t, auto& p) {
                         auto rows = t.gather_rows(p[0], ids);
                         return t.mse(rows, t.input(random_tensor(rng, {m, k})));
                       }});
      cases.push_back({"sqdist", {&a}, [&](Tape<double>& t, auto& p) {
                         return t.sqdist_sum(p[0], t.input(random_tensor(rng, {m, k})));
                       }});
      cases.push_back({"softmax_xent", {&a, &b}, [&](Tape<double>& t, auto& p) {
                         return t.softmax_xent_mean(t.matmul(p[0], p[1]), labels);
                       }});

      for (auto& c : cases) {
        INFO(c.name);
        auto loss_value = [&] {
          Tape<double> t;
          std::vector<Tape<double>::NodeId> p;
          for (auto* param : c.params) p.push_back(t.param(*param));
          return t.value(c.build(t, p)).item();
        };
        auto analytic = [&] {
          Tape<double> t;
          std::vector<Tape<double>::NodeId> p;
          for (auto* param : c.params) p.push_back(t.param(*param));
          t.backward(c.build(t, p));
          std::vector<Tensor<double>> out;
          for (auto id : p) out.push_back(t.grad(id));
          return out;
        };
        Rng pick(seed * 977 + 13);
        CHECK(sampled_fd_error(c.params, loss_value, analytic, pick) < 1e-4);
      }
    }
  }
}

TEST_CASE("shared subexpressions accumulate once per consumer") {
  Rng rng(7);
  auto x = random_tensor(rng, {3, 4});
  auto w = random_tensor(rng, {4, 4});
  auto target = random_tensor(rng, {3, 4});
  auto build = [&](Tape<double>& t, std::vector<Tape<double>::NodeId>& p) {
    auto shared = t.relu(t.matmul(p[0], p[1]));
    auto twice = t.add(shared, shared);              // same node consumed twice
    auto chained = t.matmul(twice, p[1]);            // and w consumed twice
    return t.mse(chained, t.input(target));
  };
  std::vector<Tensor<double>*> params{&x, &w};
  auto loss_value = [&] {
    Tape<double> t;
    std::vector<Tape<double>::NodeId> p{t.param(x), t.param(w)};
    return t.value(build(t, p)).item();
  };
  auto analytic = [&] {
    Tape<double> t;
    std::vector<Tape<double>::NodeId> p{t.param(x), t.param(w)};
    t.backward(build(t, p));
    return std::vector<Tensor<double>>{t.grad(p[0]), t.grad(p[1])};
  };
  Rng pick(99);
  CHECK(sampled_fd_error(params, loss_value, analytic, pick) < 1e-6);
}

TEST_CASE("grad_check on a pure linear map is clean") {
  Rng rng(3);
  auto w = random_tensor(rng, {6, 4});
  auto x = random_tensor(rng, {2, 6});
  auto target = random_tensor(rng, {2, 4});
  ddn::GradCheckFragment f;
  f.params = {&w};
  f.loss = [&] {
    Tape<double> t;
    return t.value(t.mse(t.matmul(t.input(x), t.param(w)), t.input(target))).item();
  };
  f.analytic = [&] {
    Tape<double> t;
    auto p = t.param(w);
    t.backward(t.mse(t.matmul(t.input(x), p), t.input(target)));
    return std::vector<Tensor<double>>{t.grad(p)};
  };
  CHECK(ddn::grad_check(f) < 1e-6);
}

TEST_CASE("grad_check flags a corrupted gradient rule") {
  Rng rng(4);
  auto w = random_tensor(rng, {5, 3});
  auto x = random_tensor(rng, {2, 5});
  auto target = random_tensor(rng, {2, 3});
  ddn::GradCheckFragment f;
  f.params = {&w};
  f.loss = [&] {
    Tape<double> t;
    return t.value(t.mse(t.matmul(t.input(x), t.param(w)), t.input(target))).item();
  };
  f.analytic = [&] {
    Tape<double> t;
    auto p = t.param(w);
    t.backward(t.mse(t.matmul(t.input(x), p), t.input(target)));
    Tensor<double> g = t.grad(p);
    for (std::size_t i = 0; i < g.numel(); ++i) g[i] *= 2.0;  // deliberate corruption
    return std::vector<Tensor<double>>{g};
  };
  CHECK(ddn::grad_check(f) > 0.1);
}

TEST_CASE("grad_check of a zero-parameter function reports zero") {
  ddn::GradCheckFragment f;
  f.params = {};
  f.loss = [] { return 1.5; };
  f.analytic = [] { return std::vector<Tensor<double>>{}; };
  CHECK(ddn::grad_check(f) == 0.0);
}

TEST_CASE("finite-difference oracle with the documented 1e-3 step") {
  // Random affine+relu chain, 64-bit, step 1e-3: max relative error < 1e-4.
  Rng rng(11);
  auto w1 = random_tensor(rng, {8, 6});
  auto b1 = random_tensor(rng, {6});
  auto w2 = random_tensor(rng, {6, 3});
  auto b2 = random_tensor(rng, {3});
  auto x = random_tensor(rng, {4, 8});
  auto target = random_tensor(rng, {4, 3});
  ddn::GradCheckFragment f;
  f.params = {&w1, &b1, &w2, &b2};
  auto build = [&](Tape<double>& t, std::vector<Tape<double>::NodeId>& p) {
    auto h = t.relu(t.affine(t.input(x), p[0], p[1]));
    return t.mse(t.affine(h, p[2], p[3]), t.input(target));
  };
  f.loss = [&] {
    Tape<double> t;
    std::vector<Tape<double>::NodeId> p{t.param(w1), t.param(b1), t.param(w2), t.param(b2)};
    return t.value(build(t, p)).item();
  };
  f.analytic = [&] {
    Tape<double> t;
    std::vector<Tape<double>::NodeId> p{t.param(w1), t.param(b1), t.param(w2), t.param(b2)};
    t.backward(build(t, p));
    std::vector<Tensor<double>> out;
    for (auto id : p) out.push_back(t.grad(id));
    return out;
  };
  CHECK(ddn::grad_check(f, 1e-3) < 1e-4);
}

TEST_CASE("adam first step is a bias-corrected signed step") {
  ddn::AdamConfig<double> cfg;
  cfg.lr = 0.1;
  ddn::Adam<double> adam(cfg);
  Tensor<double> p = Tensor<double>::vec({1.0, -2.0, 0.5});
  std::vector<Tensor<double>*> params{&p};
  std::vector<Tensor<double>> grads{Tensor<double>::vec({3.0, -0.2, 1e-3})};
  adam.step(params, grads);
  CHECK_THAT(p[0], Catch::Matchers::WithinAbs(1.0 - 0.1, 1e-4));
  CHECK_THAT(p[1], Catch::Matchers::WithinAbs(-2.0 + 0.1, 1e-4));
  CHECK_THAT(p[2], Catch::Matchers::WithinAbs(0.5 - 0.1, 1e-3));
}

TEST_CASE("adam with zero gradient and fresh moments is a no-op") {
  ddn::Adam<float> adam;
  Tensor<float> p = Tensor<float>::vec({0.25f, -1.75f});
  const Tensor<float> before = p;
  std::vector<Tensor<float>*> params{&p};
  std::vector<Tensor<float>> grads{Tensor<float>({2})};
  adam.step(params, grads);
  CHECK(p[0] == before[0]);
  CHECK(p[1] == before[1]);
}

TEST_CASE("adam two-step recurrence matches the hand-unrolled update") {
  ddn::AdamConfig<double> cfg;
  cfg.lr = 0.1;
  cfg.beta1 = 0.9;
  cfg.beta2 = 0.999;
  ddn::Adam<double> adam(cfg);
  Tensor<double> p = Tensor<double>::vec({0.0});
  std::vector<Tensor<double>*> params{&p};
  std::vector<Tensor<double>> grads{Tensor<double>::vec({1.0})};
  adam.step(params, grads);
  adam.step(params, grads);

  // Hand-unrolled two steps of the recurrence with g = 1.
  double m = 0, v = 0, x = 0;
  for (int t = 1; t <= 2; ++t) {
    m = 0.9 * m + 0.1 * 1.0;
    v = 0.999 * v + 0.001 * 1.0;
    const double mhat = m / (1 - std::pow(0.9, t));
    const double vhat = v / (1 - std::pow(0.999, t));
    x -= 0.1 * mhat / (std::sqrt(vhat) + 1e-8);
  }
  CHECK_THAT(p[0], Catch::Matchers::WithinAbs(x, 1e-6));
}

TEST_CASE("adam with lr zero leaves parameters bit-identical") {
  ddn::AdamConfig<float> cfg;
  cfg.lr = 0.0f;
  ddn::Adam<float> adam(cfg);
  Tensor<float> p = Tensor<float>::vec({0.1f, -2.5f, 1e-7f});
  const Tensor<float> before = p;
  std::vector<Tensor<float>*> params{&p};
  std::vector<Tensor<float>> grads{Tensor<float>::vec({5.0f, -3.0f, 0.0f})};
  adam.step(params, grads);
  adam.step(params, grads);
  for (std::size_t i = 0; i < p.numel(); ++i) CHECK(p[i] == before[i]);
}

TEST_CASE("adam rejects mismatched gradient shapes") {
  ddn::Adam<float> adam;
  Tensor<float> p = Tensor<float>::vec({1.0f});
  std::vector<Tensor<float>*> params{&p};
  std::vector<Tensor<float>> grads{Tensor<float>({2})};
  CHECK_THROWS_AS(adam.step(params, grads), ddn::DimError);
}

TEST_CASE("graph evaluation is deterministic") {
  auto run = [] {
    Rng rng(42);
    Tape<float> t;
    auto a = t.param(random_tensor(rng, {8, 8}).cast<float>());
    auto b = t.param(random_tensor(rng, {8, 8}).cast<float>());
    auto loss = t.mse(t.tanh(t.matmul(a, b)), t.input(Tensor<float>({8, 8}, 0.1f)));
    t.backward(loss);
    return std::pair{t.value(loss).item(), t.grad(a)[17]};
  };
  auto [l1, g1] = run();
  auto [l2, g2] = run();
  CHECK(l1 == l2);
  CHECK(g1 == g2);
}
