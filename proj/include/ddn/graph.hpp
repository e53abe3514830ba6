#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "ddn/errors.hpp"
#include "ddn/tensor.hpp"

namespace ddn {

// Reverse-mode autodiff tape. Nodes are appended in evaluation order, which
// is a topological order by construction; backward() walks the tape in
// reverse so every node's gradient is complete before it is propagated to
// its parents (each consumer contributes exactly once).
//
// Single-threaded per tape. Independent tapes may run on separate threads.
template <typename S>
class Tape {
 public:
  using NodeId = std::int32_t;

  enum class Op : std::uint8_t {
    kInput,
    kParam,
    kMatmul,
    kAffine,
    kRelu,
    kTanh,
    kAdd,
    kScale,
    kConcatCols,
    kGatherRows,
    kSqDistSum,
    kSoftmaxXentSum,
  };

  NodeId input(Tensor<S> v) { return push(Op::kInput, std::move(v), {}); }

  // Learnable leaf. Gradients for every param node are available after
  // backward(), including zeros for params the loss does not depend on.
  NodeId param(const Tensor<S>& v) {
    NodeId id = push(Op::kParam, v, {});
    param_nodes_.push_back(id);
    return id;
  }

  NodeId matmul(NodeId a, NodeId b) {
    return push(Op::kMatmul, ops::matmul(value(a), value(b)), {a, b});
  }

  NodeId affine(NodeId x, NodeId w, NodeId b) {
    return push(Op::kAffine, ops::affine(value(x), value(w), value(b)), {x, w, b});
  }

  NodeId relu(NodeId x) { return push(Op::kRelu, ops::relu(value(x)), {x}); }

  NodeId tanh(NodeId x) { return push(Op::kTanh, ops::tanh(value(x)), {x}); }

  NodeId add(NodeId a, NodeId b) {
    return push(Op::kAdd, ops::add(value(a), value(b)), {a, b});
  }

  NodeId scale(NodeId a, S factor) {
    NodeId id = push(Op::kScale, ops::scale(value(a), factor), {a});
    nodes_[id].factor = factor;
    return id;
  }

  NodeId concat_cols(NodeId a, NodeId b) {
    NodeId id = push(Op::kConcatCols, ops::concat_cols(value(a), value(b)), {a, b});
    nodes_[id].split = value(a).cols();
    return id;
  }

  NodeId gather_rows(NodeId table, std::vector<std::int32_t> ids) {
    NodeId id = push(Op::kGatherRows, ops::gather_rows(value(table), ids), {table});
    nodes_[id].ids = std::move(ids);
    return id;
  }

  // Scalar: sum over all entries of (a-b)^2.
  NodeId sqdist_sum(NodeId a, NodeId b) {
    return push(Op::kSqDistSum, Tensor<S>::scalar(ops::sqdist_sum(value(a), value(b))),
                {a, b});
  }

  // Scalar: mean over all entries of (a-b)^2.
  NodeId mse(NodeId a, NodeId b) {
    NodeId s = sqdist_sum(a, b);
    return scale(s, S(1) / static_cast<S>(value(a).numel()));
  }

  // Scalar: softmax cross-entropy against integer targets, summed over rows.
  NodeId softmax_xent_sum(NodeId logits, std::vector<std::int32_t> targets) {
    auto [loss, probs] = ops::softmax_xent_sum(value(logits), targets);
    NodeId id = push(Op::kSoftmaxXentSum, Tensor<S>::scalar(loss), {logits});
    nodes_[id].ids = std::move(targets);
    nodes_[id].saved = std::move(probs);
    return id;
  }

  NodeId softmax_xent_mean(NodeId logits, std::vector<std::int32_t> targets) {
    const S n = static_cast<S>(value(logits).rows());
    return scale(softmax_xent_sum(logits, std::move(targets)), S(1) / n);
  }

  const Tensor<S>& value(NodeId id) const { return nodes_[static_cast<std::size_t>(id)].value; }

  std::size_t size() const { return nodes_.size(); }
  const std::vector<NodeId>& params() const { return param_nodes_; }

  // Reverse sweep from a scalar loss. Fills gradients for every node on the
  // path and guarantees an allocated (possibly zero) gradient for every
  // param leaf.
  void backward(NodeId loss, S seed = S(1)) {
    if (value(loss).numel() != 1) {
      throw UsageError("backward: loss must be a scalar, got shape " + value(loss).shape_str());
    }
    grads_.resize(nodes_.size());
    grad_at(loss)[0] += seed;
    for (std::int32_t i = loss; i >= 0; --i) {
      if (grads_[static_cast<std::size_t>(i)].empty()) continue;
      propagate(static_cast<NodeId>(i));
    }
    for (NodeId p : param_nodes_) {
      Tensor<S>& g = grad_at(p);
      check_finite(g, "backward");
    }
  }

  // Gradient of the last backward() w.r.t. a node; zeros if untouched.
  const Tensor<S>& grad(NodeId id) {
    grads_.resize(nodes_.size());
    return grad_at(id);
  }

  void reset() {
    nodes_.clear();
    grads_.clear();
    param_nodes_.clear();
  }

 private:
  struct Node {
    Op op;
    Tensor<S> value;
    NodeId parent[3] = {-1, -1, -1};
    std::vector<std::int32_t> ids;  // gather indices or xent targets
    Tensor<S> saved;                // xent softmax probabilities
    S factor = S(1);
    std::size_t split = 0;
  };

  NodeId push(Op op, Tensor<S> value, std::initializer_list<NodeId> parents) {
    check_finite(value, op_name(op));
    Node n;
    n.op = op;
    n.value = std::move(value);
    std::size_t i = 0;
    for (NodeId p : parents) n.parent[i++] = p;
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size() - 1);
  }

  Tensor<S>& grad_at(NodeId id) {
    Tensor<S>& g = grads_[static_cast<std::size_t>(id)];
    if (g.empty()) g = Tensor<S>(value(id).shape());
    return g;
  }

  static void axpy(Tensor<S>& dst, const Tensor<S>& src, S f) {
    for (std::size_t i = 0; i < dst.numel(); ++i) dst[i] += f * src[i];
  }

  void propagate(NodeId id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    const Tensor<S>& g = grads_[static_cast<std::size_t>(id)];
    switch (n.op) {
      case Op::kInput:
      case Op::kParam:
        break;
      case Op::kMatmul: {
        const Tensor<S>& a = value(n.parent[0]);
        const Tensor<S>& b = value(n.parent[1]);
        axpy(grad_at(n.parent[0]), ops::matmul(g, ops::transpose(b)), S(1));
        axpy(grad_at(n.parent[1]), ops::matmul(ops::transpose(a), g), S(1));
        break;
      }
      case Op::kAffine: {
        const Tensor<S>& x = value(n.parent[0]);
        const Tensor<S>& w = value(n.parent[1]);
        axpy(grad_at(n.parent[0]), ops::matmul(g, ops::transpose(w)), S(1));
        axpy(grad_at(n.parent[1]), ops::matmul(ops::transpose(x), g), S(1));
        axpy(grad_at(n.parent[2]), ops::colsum(g), S(1));
        break;
      }
      case Op::kRelu: {
        const Tensor<S>& x = value(n.parent[0]);
        Tensor<S>& gx = grad_at(n.parent[0]);
        for (std::size_t i = 0; i < gx.numel(); ++i) {
          if (x[i] > S(0)) gx[i] += g[i];
        }
        break;
      }
      case Op::kTanh: {
        const Tensor<S>& y = n.value;
        Tensor<S>& gx = grad_at(n.parent[0]);
        for (std::size_t i = 0; i < gx.numel(); ++i) gx[i] += g[i] * (S(1) - y[i] * y[i]);
        break;
      }
      case Op::kAdd:
        axpy(grad_at(n.parent[0]), g, S(1));
        axpy(grad_at(n.parent[1]), g, S(1));
        break;
      case Op::kScale:
        axpy(grad_at(n.parent[0]), g, n.factor);
        break;
      case Op::kConcatCols: {
        Tensor<S>& ga = grad_at(n.parent[0]);
        Tensor<S>& gb = grad_at(n.parent[1]);
        const std::size_t m = n.value.rows(), ca = n.split, cb = n.value.cols() - n.split;
        for (std::size_t i = 0; i < m; ++i) {
          const S* gi = g.row(i);
          S* gai = ga.data() + i * ca;
          S* gbi = gb.data() + i * cb;
          for (std::size_t j = 0; j < ca; ++j) gai[j] += gi[j];
          for (std::size_t j = 0; j < cb; ++j) gbi[j] += gi[ca + j];
        }
        break;
      }
      case Op::kGatherRows: {
        Tensor<S>& gt = grad_at(n.parent[0]);
        const std::size_t c = n.value.cols();
        for (std::size_t i = 0; i < n.ids.size(); ++i) {
          S* dst = gt.row(static_cast<std::size_t>(n.ids[i]));
          const S* src = g.row(i);
          for (std::size_t j = 0; j < c; ++j) dst[j] += src[j];
        }
        break;
      }
      case Op::kSqDistSum: {
        const Tensor<S>& a = value(n.parent[0]);
        const Tensor<S>& b = value(n.parent[1]);
        Tensor<S>& ga = grad_at(n.parent[0]);
        Tensor<S>& gb = grad_at(n.parent[1]);
        const S gs = g[0];
        for (std::size_t i = 0; i < a.numel(); ++i) {
          const S d = S(2) * gs * (a[i] - b[i]);
          ga[i] += d;
          gb[i] -= d;
        }
        break;
      }
      case Op::kSoftmaxXentSum: {
        Tensor<S>& gl = grad_at(n.parent[0]);
        const Tensor<S>& p = n.saved;
        const S gs = g[0];
        const std::size_t m = p.rows(), c = p.cols();
        for (std::size_t i = 0; i < m; ++i) {
          const S* pi = p.row(i);
          S* gi = gl.data() + i * c;
          for (std::size_t j = 0; j < c; ++j) gi[j] += gs * pi[j];
          gi[static_cast<std::size_t>(n.ids[i])] -= gs;
        }
        break;
      }
    }
  }

  static const char* op_name(Op op) {
    switch (op) {
      case Op::kInput: return "input";
      case Op::kParam: return "param";
      case Op::kMatmul: return "matmul";
      case Op::kAffine: return "affine";
      case Op::kRelu: return "relu";
      case Op::kTanh: return "tanh";
      case Op::kAdd: return "add";
      case Op::kScale: return "scale";
      case Op::kConcatCols: return "concat_cols";
      case Op::kGatherRows: return "gather_rows";
      case Op::kSqDistSum: return "sqdist_sum";
      case Op::kSoftmaxXentSum: return "softmax_xent";
    }
    return "?";
  }

  std::vector<Node> nodes_;
  std::vector<Tensor<S>> grads_;
  std::vector<NodeId> param_nodes_;
};

}  // namespace ddn
