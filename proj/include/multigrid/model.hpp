// Copyright 2026 The Multigrid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "multigrid/tensor.hpp"

namespace multigrid {

// Reference 3D CNN: a strided stem conv followed by stride-1 conv blocks, each
// conv with batch norm and ReLU, then global average pooling and one fully
// connected classifier. All convolutions share weights over t, h and w, so
// any input shape at or above minimum_input() is accepted.
struct ModelConfig {
  int in_channels = 1;
  std::vector<int> channels{8, 16, 16};  // stem, then one entry per block
  int num_classes = 8;
  std::array<int, 3> stem_kernel{3, 7, 7};
  std::array<int, 3> stem_stride{1, 2, 2};
  int block_kernel = 3;

  void validate() const;
};

struct MinimumInput {
  std::int64_t t = 1;
  std::int64_t h = 1;
  std::int64_t w = 1;
};

MinimumInput minimum_input(const ModelConfig& config);

// Trainable tensors in a fixed order (conv{l}.weight, bn{l}.gamma, bn{l}.beta
// per layer, then fc.weight, fc.bias) plus BN running statistics.
template <typename T>
struct ModelParams {
  std::vector<std::string> names;
  std::vector<Tensor<T>> tensors;
  std::vector<std::string> buffer_names;
  std::vector<Tensor<T>> buffers;  // bn{l}.running_mean, bn{l}.running_var

  Tensor<T>& get(const std::string& name);
  const Tensor<T>& get(const std::string& name) const;
};

template <typename T>
ModelParams<T> init_params(const ModelConfig& config, std::uint64_t seed);

template <typename T>
struct LossAndGrads {
  T loss{};
  std::vector<Tensor<T>> grads;  // parallel to ModelParams::tensors
};

// Train-mode forward and backward. BN statistics use groups of `bn_group`
// clips; running statistics in `params.buffers` are updated.
template <typename T>
LossAndGrads<T> forward_backward(const ModelConfig& config, ModelParams<T>& params,
                                 const Tensor<T>& batch, std::span<const int> labels,
                                 std::int64_t bn_group);

// Eval-mode logits, (batch, classes), using running BN statistics.
template <typename T>
Tensor<T> forward_eval(const ModelConfig& config, const ModelParams<T>& params, const Tensor<T>& batch);

// Checks that `batch` is (b, t, h, w, in_channels) with t, h, w at or above
// the network minimum; throws a shape error naming the minimum otherwise.
void check_input_shape(const ModelConfig& config, const std::vector<std::int64_t>& shape);

}  // namespace multigrid
