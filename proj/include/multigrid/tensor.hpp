// Copyright 2026 The Multigrid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

namespace multigrid {

// Dense row-major tensor. Activations use (batch, t, h, w, channels).
template <typename T>
struct Tensor {
  std::vector<std::int64_t> shape;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::int64_t> dims, T fill = T(0))
      : shape(std::move(dims)), data(count(shape), fill) {}

  static std::size_t count(const std::vector<std::int64_t>& dims) {
    return static_cast<std::size_t>(
        std::accumulate(dims.begin(), dims.end(), std::int64_t{1}, std::multiplies<>()));
  }

  std::size_t size() const { return data.size(); }
  std::int64_t dim(std::size_t i) const { return shape[i]; }
  std::size_t rank() const { return shape.size(); }
  T* ptr() { return data.data(); }
  const T* ptr() const { return data.data(); }
  void fill(T v) { std::fill(data.begin(), data.end(), v); }
};

std::string shape_string(const std::vector<std::int64_t>& shape);

}  // namespace multigrid
