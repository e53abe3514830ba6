#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "ddn/tensor.hpp"

namespace ddn {

// A differentiable fragment for verification: given the current parameter
// values it must (re)evaluate the scalar loss. `analytic` must return the
// gradients in parameter order, typically by building a Tape and calling
// backward. Evaluation runs in 64-bit; finite-difference tolerances are
// unreliable at 32-bit.
struct GradCheckFragment {
  std::vector<Tensor<double>*> params;
  std::function<double()> loss;
  std::function<std::vector<Tensor<double>>()> analytic;
};

// Central finite differences of fragment.loss w.r.t. every parameter entry.
inline std::vector<Tensor<double>> numeric_gradient(const GradCheckFragment& f,
                                                    double step = 1e-4) {
  std::vector<Tensor<double>> out;
  out.reserve(f.params.size());
  for (Tensor<double>* p : f.params) {
    Tensor<double> g(p->shape());
    for (std::size_t i = 0; i < p->numel(); ++i) {
      const double keep = (*p)[i];
      (*p)[i] = keep + step;
      const double up = f.loss();
      (*p)[i] = keep - step;
      const double down = f.loss();
      (*p)[i] = keep;
      g[i] = (up - down) / (2.0 * step);
    }
    out.push_back(std::move(g));
  }
  return out;
}

inline double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

// Max over all parameter entries of the relative disagreement between the
// analytic gradient and central finite differences. Reports, never throws.
inline double grad_check(const GradCheckFragment& f, double step = 1e-4) {
  const std::vector<Tensor<double>> analytic = f.analytic();
  const std::vector<Tensor<double>> numeric = numeric_gradient(f, step);
  double worst = 0.0;
  for (std::size_t k = 0; k < analytic.size(); ++k) {
    for (std::size_t i = 0; i < analytic[k].numel(); ++i) {
      worst = std::max(worst, relative_error(analytic[k][i], numeric[k][i]));
    }
  }
  return worst;
}

}  // namespace ddn
