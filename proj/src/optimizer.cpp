// Copyright 2026 The Multigrid Authors
// SPDX-License-Identifier: Apache-2.0

#include "multigrid/optimizer.hpp"

#include "multigrid/error.hpp"

namespace multigrid {

template <typename T>
SgdState<T> SgdState<T>::zeros_like(const std::vector<Tensor<T>>& params, double momentum,
                                    double weight_decay) {
  SgdState s;
  s.momentum = momentum;
  s.weight_decay = weight_decay;
  for (const auto& p : params) s.velocity.emplace_back(p.shape);
  return s;
}

template <typename T>
void sgd_step(std::vector<Tensor<T>>& params, const std::vector<Tensor<T>>& grads, SgdState<T>& state,
              double lr) {
  if (params.size() != grads.size() || params.size() != state.velocity.size()) {
    fail(ErrorCode::kShape, "sgd_step: parameter, gradient and state counts differ");
  }
  const T mu = static_cast<T>(state.momentum);
  const T wd = static_cast<T>(state.weight_decay);
  const T step = static_cast<T>(lr);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i].data;
    const auto& g = grads[i].data;
    auto& v = state.velocity[i].data;
    if (p.size() != g.size() || p.size() != v.size()) {
      fail(ErrorCode::kShape, "sgd_step: shape mismatch at parameter " + std::to_string(i));
    }
    for (std::size_t k = 0; k < p.size(); ++k) {
      v[k] = mu * v[k] + (g[k] + wd * p[k]);
      p[k] -= step * v[k];
    }
  }
}

template struct SgdState<float>;
template struct SgdState<double>;
template void sgd_step(std::vector<Tensor<float>>&, const std::vector<Tensor<float>>&, SgdState<float>&,
                       double);
template void sgd_step(std::vector<Tensor<double>>&, const std::vector<Tensor<double>>&,
                       SgdState<double>&, double);

}  // namespace multigrid
