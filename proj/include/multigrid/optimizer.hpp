// Copyright 2026 The Multigrid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "multigrid/tensor.hpp"

namespace multigrid {

template <typename T>
struct SgdState {
  std::vector<Tensor<T>> velocity;  // mirrors the parameter shapes
  double momentum = 0.9;
  double weight_decay = 1e-4;

  static SgdState zeros_like(const std::vector<Tensor<T>>& params, double momentum, double weight_decay);
};

// v <- momentum * v + (g + weight_decay * theta); theta <- theta - lr * v
template <typename T>
void sgd_step(std::vector<Tensor<T>>& params, const std::vector<Tensor<T>>& grads, SgdState<T>& state,
              double lr);

}  // namespace multigrid
