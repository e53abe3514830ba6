#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

#include "ddn/errors.hpp"

namespace ddn {

// Dense row-major tensor of rank 1 or 2. Scalar results use shape {1}.
// The scalar type is float for training and double for gradient checking.
template <typename S>
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<std::size_t> shape)
      : shape_(std::move(shape)), data_(count(shape_), S(0)) {}

  Tensor(std::vector<std::size_t> shape, S fill)
      : shape_(std::move(shape)), data_(count(shape_), fill) {}

  Tensor(std::vector<std::size_t> shape, std::vector<S> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (count(shape_) != data_.size()) {
      throw DimError("tensor data length " + std::to_string(data_.size()) +
                     " does not match shape product " + std::to_string(count(shape_)));
    }
  }

  static Tensor scalar(S v) { return Tensor({1}, std::vector<S>{v}); }

  static Tensor vec(std::vector<S> v) {
    std::size_t n = v.size();
    return Tensor({n}, std::move(v));
  }

  static Tensor matrix(std::size_t r, std::size_t c, std::vector<S> v) {
    return Tensor({r, c}, std::move(v));
  }

  static Tensor matrix(std::initializer_list<std::initializer_list<S>> rows) {
    std::size_t r = rows.size();
    std::size_t c = r ? rows.begin()->size() : 0;
    std::vector<S> v;
    v.reserve(r * c);
    for (const auto& row : rows) {
      if (row.size() != c) throw DimError("ragged matrix initializer");
      v.insert(v.end(), row.begin(), row.end());
    }
    return Tensor({r, c}, std::move(v));
  }

  std::size_t rank() const { return shape_.size(); }
  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t numel() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  // Matrix view: rank-1 tensors act as a single row.
  std::size_t rows() const { return rank() == 2 ? shape_[0] : 1; }
  std::size_t cols() const { return rank() == 2 ? shape_[1] : numel(); }

  S* data() { return data_.data(); }
  const S* data() const { return data_.data(); }
  S* row(std::size_t i) { return data_.data() + i * cols(); }
  const S* row(std::size_t i) const { return data_.data() + i * cols(); }

  S& operator[](std::size_t i) { return data_[i]; }
  S operator[](std::size_t i) const { return data_[i]; }
  S& at(std::size_t i, std::size_t j) { return data_[i * cols() + j]; }
  S at(std::size_t i, std::size_t j) const { return data_[i * cols() + j]; }

  S item() const {
    if (numel() != 1) throw UsageError("item() on non-scalar tensor");
    return data_[0];
  }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  bool all_finite() const {
    for (S v : data_) {
      if (!std::isfinite(static_cast<double>(v))) return false;
    }
    return true;
  }

  template <typename T>
  Tensor<T> cast() const {
    std::vector<T> out(data_.begin(), data_.end());
    return Tensor<T>(shape_, std::move(out));
  }

  std::string shape_str() const {
    std::string s = "[";
    for (std::size_t i = 0; i < shape_.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(shape_[i]);
    }
    return s + "]";
  }

 private:
  static std::size_t count(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return shape.empty() ? 0 : n;
  }

  std::vector<std::size_t> shape_;
  std::vector<S> data_;
};

template <typename S>
inline void check_finite(const Tensor<S>& t, const char* op) {
  if (!t.all_finite()) {
    throw NumericError(std::string("non-finite value produced by ") + op);
  }
}

// ---------------------------------------------------------------------------
// Kernels. Pure functions; shape errors throw DimError. These are shared by
// the autodiff tape (which records them) and by direct inference paths.
// ---------------------------------------------------------------------------
namespace ops {

// C[m,n] = A[m,k] * B[k,n]. i-k-j loop order keeps the inner loop contiguous.
template <typename S>
Tensor<S> matmul(const Tensor<S>& a, const Tensor<S>& b) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) {
    throw DimError("matmul: " + a.shape_str() + " x " + b.shape_str());
  }
  Tensor<S> c(a.rank() == 1 && m == 1 ? std::vector<std::size_t>{n}
                                      : std::vector<std::size_t>{m, n});
  for (std::size_t i = 0; i < m; ++i) {
    S* __restrict ci = c.data() + i * n;
    const S* ai = a.row(i);
    for (std::size_t l = 0; l < k; ++l) {
      const S av = ai[l];
      const S* __restrict bl = b.data() + l * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bl[j];
    }
  }
  return c;
}

template <typename S>
Tensor<S> transpose(const Tensor<S>& a) {
  const std::size_t m = a.rows(), n = a.cols();
  Tensor<S> t({n, m});
  for (std::size_t i = 0; i < m; ++i) {
    const S* ai = a.row(i);
    for (std::size_t j = 0; j < n; ++j) t.at(j, i) = ai[j];
  }
  return t;
}

// Y = X * W + b (bias broadcast over rows).
template <typename S>
Tensor<S> affine(const Tensor<S>& x, const Tensor<S>& w, const Tensor<S>& b) {
  if (w.rows() != x.cols() || b.numel() != w.cols()) {
    throw DimError("affine: x" + x.shape_str() + " w" + w.shape_str() + " b" + b.shape_str());
  }
  Tensor<S> y = matmul(x, w);
  const std::size_t m = y.rows(), n = y.cols();
  for (std::size_t i = 0; i < m; ++i) {
    S* yi = y.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) yi[j] += b[j];
  }
  return y;
}

template <typename S>
Tensor<S> relu(const Tensor<S>& x) {
  Tensor<S> y = x;
  for (std::size_t i = 0; i < y.numel(); ++i) y[i] = y[i] > S(0) ? y[i] : S(0);
  return y;
}

template <typename S>
Tensor<S> tanh(const Tensor<S>& x) {
  Tensor<S> y = x;
  for (std::size_t i = 0; i < y.numel(); ++i) y[i] = std::tanh(y[i]);
  return y;
}

template <typename S>
Tensor<S> add(const Tensor<S>& a, const Tensor<S>& b) {
  if (!a.same_shape(b)) throw DimError("add: " + a.shape_str() + " vs " + b.shape_str());
  Tensor<S> c = a;
  for (std::size_t i = 0; i < c.numel(); ++i) c[i] += b[i];
  return c;
}

template <typename S>
Tensor<S> scale(const Tensor<S>& a, S f) {
  Tensor<S> c = a;
  for (std::size_t i = 0; i < c.numel(); ++i) c[i] *= f;
  return c;
}

// Column concatenation; ranks must match.
template <typename S>
Tensor<S> concat_cols(const Tensor<S>& a, const Tensor<S>& b) {
  if (a.rows() != b.rows() || a.rank() != b.rank()) {
    throw DimError("concat_cols: " + a.shape_str() + " vs " + b.shape_str());
  }
  const std::size_t m = a.rows(), ca = a.cols(), cb = b.cols();
  Tensor<S> c(a.rank() == 1 ? std::vector<std::size_t>{ca + cb}
                            : std::vector<std::size_t>{m, ca + cb});
  for (std::size_t i = 0; i < m; ++i) {
    S* ci = c.data() + i * (ca + cb);
    const S* ai = a.row(i);
    const S* bi = b.row(i);
    for (std::size_t j = 0; j < ca; ++j) ci[j] = ai[j];
    for (std::size_t j = 0; j < cb; ++j) ci[ca + j] = bi[j];
  }
  return c;
}

// Rows of `table` selected by `ids`.
template <typename S>
Tensor<S> gather_rows(const Tensor<S>& table, const std::vector<std::int32_t>& ids) {
  const std::size_t c = table.cols();
  Tensor<S> out({ids.size(), c});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto id = ids[i];
    if (id < 0 || static_cast<std::size_t>(id) >= table.rows()) {
      throw RangeError("gather_rows: id " + std::to_string(id) + " out of range [0, " +
                       std::to_string(table.rows()) + ")");
    }
    const S* src = table.row(static_cast<std::size_t>(id));
    S* dst = out.row(i);
    for (std::size_t j = 0; j < c; ++j) dst[j] = src[j];
  }
  return out;
}

// Sum over all entries of (a - b)^2.
template <typename S>
S sqdist_sum(const Tensor<S>& a, const Tensor<S>& b) {
  if (!a.same_shape(b)) throw DimError("sqdist_sum: " + a.shape_str() + " vs " + b.shape_str());
  S acc = 0;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    const S d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

template <typename S>
Tensor<S> softmax_rows(const Tensor<S>& logits) {
  const std::size_t m = logits.rows(), n = logits.cols();
  Tensor<S> p = logits;
  for (std::size_t i = 0; i < m; ++i) {
    S* pi = p.data() + i * n;
    S mx = pi[0];
    for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, pi[j]);
    S sum = 0;
    for (std::size_t j = 0; j < n; ++j) {
      pi[j] = std::exp(pi[j] - mx);
      sum += pi[j];
    }
    for (std::size_t j = 0; j < n; ++j) pi[j] /= sum;
  }
  return p;
}

// Softmax + cross-entropy against integer targets, summed over rows.
// Returns the loss and the softmax probabilities (needed for the backward rule).
template <typename S>
std::pair<S, Tensor<S>> softmax_xent_sum(const Tensor<S>& logits,
                                         const std::vector<std::int32_t>& targets) {
  const std::size_t m = logits.rows(), n = logits.cols();
  if (targets.size() != m) {
    throw DimError("softmax_xent: " + std::to_string(targets.size()) + " targets for " +
                   std::to_string(m) + " rows");
  }
  Tensor<S> p = softmax_rows(logits);
  S loss = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const auto t = targets[i];
    if (t < 0 || static_cast<std::size_t>(t) >= n) {
      throw RangeError("softmax_xent: target " + std::to_string(t) + " out of range");
    }
    // Recompute the log directly from the shifted logits for accuracy.
    const S* li = logits.row(i);
    S mx = li[0];
    for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, li[j]);
    S sum = 0;
    for (std::size_t j = 0; j < n; ++j) sum += std::exp(li[j] - mx);
    loss += -(li[static_cast<std::size_t>(t)] - mx - std::log(sum));
  }
  return {loss, std::move(p)};
}

template <typename S>
Tensor<S> colsum(const Tensor<S>& a) {
  const std::size_t m = a.rows(), n = a.cols();
  Tensor<S> s({n});
  for (std::size_t i = 0; i < m; ++i) {
    const S* ai = a.row(i);
    for (std::size_t j = 0; j < n; ++j) s[j] += ai[j];
  }
  return s;
}

template <typename S>
S sq_l2(const Tensor<S>& a, const Tensor<S>& b) {
  return sqdist_sum(a, b);
}

}  // namespace ops
}  // namespace ddn
