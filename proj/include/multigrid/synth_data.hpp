// Copyright 2026 The Multigrid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "multigrid/sampling_grid.hpp"
#include "multigrid/schedule.hpp"
#include "multigrid/tensor.hpp"

namespace multigrid {

// Synthetic moving-blob videos. Class = (direction, speed); a Gaussian blob
// translates at the class velocity with wrap-around, plus i.i.d. noise.
struct SynthSpec {
  std::int64_t num_videos = 2000;
  int num_directions = 4;
  std::vector<double> speeds{1.0, 2.0};  // source pixels per frame
  int frames = 32;
  int height = 64;
  int width = 64;
  double blob_sigma = 4.0;  // pixels
  double noise = 0.05;
  std::uint64_t seed = 0;

  int num_classes() const { return num_directions * static_cast<int>(speeds.size()); }
  void validate() const;
};

struct Dataset {
  std::vector<Clip> clips;
  std::vector<int> labels;
  int num_classes = 0;

  std::size_t size() const { return clips.size(); }
  SourceShape source_shape() const;
};

// Direction index d moves along angle 2*pi*d/num_directions (x right, y down).
// Label of video i is i mod num_classes; label = direction * speeds + speed.
Dataset generate(const SynthSpec& spec);

// Video `index` alone; generate() is this for every index.
Clip generate_video(const SynthSpec& spec, std::int64_t index, int* label = nullptr);

struct Batch {
  Tensor<float> data;  // (b, t, h, w, c)
  std::vector<int> labels;
};

// record.shape.b clips drawn uniformly with replacement, each resampled on its
// own random training grid. Depends only on (dataset, record, seed).
Batch next_batch(const Dataset& dataset, const IterationRecord& record, std::uint64_t seed,
                 SpanPolicy policy = SpanPolicy::kClamp);

// CLIPBIN file per video plus index.json holding labels.
void dump_dataset(const Dataset& dataset, const std::string& dir);
Dataset load_dataset(const std::string& dir);

}  // namespace multigrid
