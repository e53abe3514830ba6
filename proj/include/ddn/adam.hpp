#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "ddn/errors.hpp"
#include "ddn/tensor.hpp"

namespace ddn {

template <typename S>
struct AdamConfig {
  S lr = S(1e-4);
  S beta1 = S(0.9);
  S beta2 = S(0.999);
  S eps = S(1e-8);
  S decay_factor = S(0.5);  // multiplied into lr when validation stalls
  int patience = 5;         // epochs without improvement before decaying
};

// Adam with bias correction. Moment buffers are allocated lazily to match
// the parameter shapes on the first step.
template <typename S>
class Adam {
 public:
  explicit Adam(AdamConfig<S> cfg = {}) : cfg_(cfg) {}

  const AdamConfig<S>& config() const { return cfg_; }
  S lr() const { return cfg_.lr; }
  void set_lr(S lr) { cfg_.lr = lr; }
  void decay_lr() { cfg_.lr *= cfg_.decay_factor; }
  std::int64_t step_count() const { return step_; }

  void step(std::vector<Tensor<S>*>& params, const std::vector<Tensor<S>>& grads) {
    if (params.size() != grads.size()) {
      throw DimError("adam: " + std::to_string(grads.size()) + " grads for " +
                     std::to_string(params.size()) + " params");
    }
    if (m_.empty()) {
      for (auto* p : params) {
        m_.emplace_back(p->shape());
        v_.emplace_back(p->shape());
      }
    }
    ++step_;
    const S bc1 = S(1) - static_cast<S>(std::pow(static_cast<double>(cfg_.beta1), static_cast<double>(step_)));
    const S bc2 = S(1) - static_cast<S>(std::pow(static_cast<double>(cfg_.beta2), static_cast<double>(step_)));
    for (std::size_t k = 0; k < params.size(); ++k) {
      Tensor<S>& p = *params[k];
      const Tensor<S>& g = grads[k];
      if (!p.same_shape(g)) {
        throw DimError("adam: grad shape " + g.shape_str() + " != param shape " + p.shape_str());
      }
      Tensor<S>& m = m_[k];
      Tensor<S>& v = v_[k];
      for (std::size_t i = 0; i < p.numel(); ++i) {
        m[i] = cfg_.beta1 * m[i] + (S(1) - cfg_.beta1) * g[i];
        v[i] = cfg_.beta2 * v[i] + (S(1) - cfg_.beta2) * g[i] * g[i];
        const S mhat = m[i] / bc1;
        const S vhat = v[i] / bc2;
        p[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
      }
    }
  }

 private:
  AdamConfig<S> cfg_;
  std::int64_t step_ = 0;
  std::vector<Tensor<S>> m_;
  std::vector<Tensor<S>> v_;
};

}  // namespace ddn
