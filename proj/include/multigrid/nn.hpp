// Copyright 2026 The Multigrid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "multigrid/tensor.hpp"

namespace multigrid::nn {

// Layer primitives with hand-written backward passes. Activations are
// (batch, t, h, w, channels). Instantiated for float and double.

struct Conv3dGeometry {
  std::array<int, 3> stride{1, 1, 1};
  std::array<int, 3> pad{0, 0, 0};
};

// Output extent along one axis: floor((in + 2 pad - k) / stride) + 1.
// Throws a shape error when the padded input is smaller than the kernel.
std::int64_t conv_out_extent(std::int64_t in, int kernel, int stride, int pad);

// Cross-correlation with zero padding. weight: (kt, kh, kw, c_in, c_out).
template <typename T>
Tensor<T> conv3d_forward(const Tensor<T>& x, const Tensor<T>& weight, const Conv3dGeometry& geom);

// Accumulates into dweight; writes dx when non-null.
template <typename T>
void conv3d_backward(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& dy,
                     const Conv3dGeometry& geom, Tensor<T>* dx, Tensor<T>& dweight);

template <typename T>
struct BatchNormCache {
  Tensor<T> xhat;
  std::vector<T> inv_std;  // groups x channels
  std::int64_t group = 0;
};

inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kBatchNormMomentum = 0.1;

// Train mode: statistics per channel within each group of `group` consecutive
// clips (over clips x t x h x w). Running stats move toward the average of the
// group statistics. Throws unless `group` divides the batch.
template <typename T>
Tensor<T> batchnorm_forward_train(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                                  std::int64_t group, BatchNormCache<T>* cache,
                                  Tensor<T>* running_mean, Tensor<T>* running_var);

template <typename T>
Tensor<T> batchnorm_forward_eval(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                                 const Tensor<T>& running_mean, const Tensor<T>& running_var);

// Accumulates into dgamma/dbeta.
template <typename T>
Tensor<T> batchnorm_backward(const Tensor<T>& dy, const Tensor<T>& gamma, const BatchNormCache<T>& cache,
                             Tensor<T>& dgamma, Tensor<T>& dbeta);

template <typename T>
void relu_inplace(Tensor<T>& x);

// Gradient through ReLU given its output y.
template <typename T>
void relu_backward_inplace(const Tensor<T>& y, Tensor<T>& dy);

// (b, t, h, w, c) -> (b, c)
template <typename T>
Tensor<T> global_avg_pool_forward(const Tensor<T>& x);

template <typename T>
Tensor<T> global_avg_pool_backward(const Tensor<T>& dy, const std::vector<std::int64_t>& in_shape);

// x: (b, c_in), weight: (c_in, c_out), bias: (c_out)
template <typename T>
Tensor<T> linear_forward(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias);

template <typename T>
Tensor<T> linear_backward(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& dy,
                          Tensor<T>& dweight, Tensor<T>& dbias);

template <typename T>
Tensor<T> softmax(const Tensor<T>& logits);

// Mean softmax cross-entropy over the batch; fills dlogits when non-null.
template <typename T>
T softmax_cross_entropy(const Tensor<T>& logits, std::span<const int> labels, Tensor<T>* dlogits);

}  // namespace multigrid::nn
