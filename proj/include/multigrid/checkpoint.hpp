// Copyright 2026 The Multigrid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>

#include "multigrid/model.hpp"
#include "multigrid/optimizer.hpp"

namespace multigrid {

// Versioned binary checkpoint; the byte layout is described in docs/checkpoint.md.
struct Checkpoint {
  ModelConfig model;
  ModelParams<float> params;
  SgdState<float> optimizer;
  // Batch sampling draws from streams keyed by (seed, iteration), so these two
  // values are the complete RNG state.
  std::uint64_t seed = 0;
  std::uint64_t next_iter = 0;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace multigrid
