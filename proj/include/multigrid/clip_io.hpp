// Copyright 2026 The Multigrid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "multigrid/sampling_grid.hpp"

namespace multigrid {

// CLIPBIN: "CLB1", then u32le frames, height, width, channels, then
// frames*height*width*channels f32le values in (frame, row, col, channel) order.
std::vector<std::uint8_t> encode_clipbin(const Clip& clip);
Clip decode_clipbin(const std::vector<std::uint8_t>& bytes);

void write_clipbin(const std::string& path, const Clip& clip);
Clip read_clipbin(const std::string& path);

}  // namespace multigrid
