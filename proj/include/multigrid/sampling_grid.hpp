// Copyright 2026 The Multigrid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "multigrid/rng.hpp"

namespace multigrid {

// Dense video clip, layout (frame, row, col, channel), row-major.
struct Clip {
  int frames = 0;
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<float> data;

  static Clip zeros(int frames, int height, int width, int channels);

  std::size_t size() const { return data.size(); }
  std::size_t index(int f, int y, int x, int c) const {
    return ((static_cast<std::size_t>(f) * height + y) * width + x) * channels + c;
  }
  float& at(int f, int y, int x, int c) { return data[index(f, y, x, c)]; }
  float at(int f, int y, int x, int c) const { return data[index(f, y, x, c)]; }

  // Throws unless all dims are >= 1, data matches the shape and every value is finite.
  void validate() const;
};

struct SourceShape {
  int frames = 0;
  int height = 0;
  int width = 0;
};

struct TargetShape {
  int t = 0;
  int h = 0;
  int w = 0;
};

// A sampling grid: span and stride per dimension, plus an offset placing the
// grid inside the source clip. Units are source frames / pixels.
struct GridSpec {
  double t_span = 0;
  double t_stride = 1;
  double t_offset = 0;
  double s_span_h = 0;
  double s_span_w = 0;
  double s_stride_h = 1;
  double s_stride_w = 1;
  double s_offset_y = 0;
  double s_offset_x = 0;

  static GridSpec identity(int frames, int height, int width);

  // floor(span / stride), with a small tolerance so that span = n * (span / n)
  // yields n points despite rounding.
  int out_frames() const;
  int out_height() const;
  int out_width() const;
};

// Ranges for randomized training grids: short-side scale interval (pixels)
// and temporal stride interval (frames).
struct GridSampleRanges {
  double short_side_min = 0;
  double short_side_max = 0;
  double t_stride_min = 1;
  double t_stride_max = 1;

  void validate() const;
  bool operator==(const GridSampleRanges&) const = default;
};

enum class SpanPolicy {
  kClamp,   // spans larger than the source are clamped to its extent
  kReject,  // ranges that can produce such spans are an error
};

// Nearest-frame temporal sampling at round(t_offset + k * t_stride) and
// bilinear spatial sampling at (s_offset_y + i * s_stride_h, s_offset_x + j * s_stride_w);
// pixel centers sit at integer coordinates, reads beyond the last pixel clamp.
Clip resample(const Clip& clip, const GridSpec& grid);

// Same as resample but writes into a preallocated buffer of
// out_frames * out_height * out_width * channels floats.
void resample_into(const Clip& clip, const GridSpec& grid, std::span<float> out);

// Checks that the grid lies inside a source of the given shape and produces a
// non-empty output.
void check_grid(const GridSpec& grid, SourceShape source);

// Random training grid producing exactly `target`: a uniform short-side scale
// from the ranges (aspect-preserving resize, then a uniform random crop) and a
// uniform integer temporal stride with a uniform start frame.
GridSpec draw_training_grid(SourceShape source, TargetShape target, const GridSampleRanges& ranges,
                            Rng& rng, SpanPolicy policy = SpanPolicy::kClamp);

// Deterministic testing grid: source resized so its short side equals
// `short_side`, center crop, temporal clip `clip_index` of `num_clips`
// uniformly spaced clips sampled at `t_stride`.
GridSpec testing_grid(SourceShape source, TargetShape target, double short_side, int t_stride,
                      int clip_index, int num_clips);

}  // namespace multigrid
