// Copyright 2026 The Multigrid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "multigrid/sampling_grid.hpp"

namespace multigrid {

// Mini-batch shape: clips x frames x height x width.
struct Shape4D {
  std::int64_t b = 1;
  std::int64_t t = 1;
  std::int64_t h = 1;
  std::int64_t w = 1;

  std::int64_t volume() const { return b * t * h * w; }
  void validate() const;
  bool operator==(const Shape4D&) const = default;
};

enum class LrKind { kStepwise, kCosine };

struct LrStage {
  std::int64_t length = 0;  // iterations
  double lr = 0;
};

struct LrSchedule {
  LrKind kind = LrKind::kStepwise;
  std::vector<LrStage> stages;
  std::int64_t warmup_iters = 0;
  double warmup_start_lr = 0;
  // Cosine only: value the curve reaches at the final iteration.
  double cosine_end_lr = 0;

  std::int64_t base_total_iters() const;
  void validate(bool finetune) const;
};

// Long-cycle shape as fractions of the base (T, H, W).
struct ShapeFactors {
  double t = 1;
  double h = 1;
  double w = 1;
};

enum class LongDesign { kMultiCycle, kSingleCycle };

struct CycleConfig {
  bool long_enabled = true;
  bool short_enabled = true;
  std::vector<ShapeFactors> long_shapes = default_long_shapes();
  LongDesign long_design = LongDesign::kMultiCycle;
  // Fractions of the default spatial shape, visited with period = list size.
  std::vector<double> short_spatial_factors = default_short_factors();
  std::int64_t bn_base_group = 8;
  double epoch_multiplier = 1.0;
  // Run the last LR stage as a fine-tuning phase at the base shape.
  bool finetune = true;

  static std::vector<ShapeFactors> default_long_shapes();
  static std::vector<double> default_short_factors();
  void validate() const;
  bool any_cycle() const { return long_enabled || short_enabled; }
};

// Short-side and temporal stride ranges at the base shape; per-record ranges
// are derived from these.
struct SamplingConfig {
  double short_side_min = 256;
  double short_side_max = 340;
  double t_stride_min = 2;
  SpanPolicy span_policy = SpanPolicy::kClamp;

  void validate() const;
};

struct ScheduleConfig {
  Shape4D base_shape;
  std::int64_t dataset_size = 0;  // clips per epoch
  LrSchedule lr;
  CycleConfig cycles;
  SamplingConfig sampling;
};

enum class Phase { kCycling, kFinetune, kBaseline };

const char* phase_name(Phase p);

struct IterationRecord {
  std::int64_t iter = 0;
  Phase phase = Phase::kBaseline;
  int long_idx = -1;  // -1: long cycle inactive
  int short_m = -1;   // -1: short cycle inactive
  Shape4D shape;
  double lr = 0;
  std::int64_t bn_group = 1;
  int lr_stage = 0;  // LR stage whose rate is in effect
  int stage = 0;     // schedule stage containing this iteration
  double long_multiplier = 1;
  double short_multiplier = 1;
  GridSampleRanges sample_ranges;
  std::int64_t cum_clips = 0;  // clips processed up to and including this record
};

struct CompiledPlan {
  std::vector<IterationRecord> records;
  Shape4D base_shape;
  std::int64_t dataset_size = 0;
  std::int64_t baseline_iters = 0;
  double epoch_multiplier = 1;

  std::int64_t total_clips() const { return records.empty() ? 0 : records.back().cum_clips; }
  double epoch_at(const IterationRecord& r) const {
    return static_cast<double>(r.cum_clips) / static_cast<double>(dataset_size);
  }
};

// b = B * (T/t) * (H/h) * (W/w), rounded, at least 1.
std::int64_t scaled_batch(const Shape4D& base, double t, double h, double w);

// Nearest even integer, at least 2.
std::int64_t round_spatial(double x);

// Short-cycle spatial shape for phase m and its batch multiplier relative to
// the long-cycle batch (computed from exact design factors, not rounded dims).
struct ShortCycleShape {
  std::int64_t h = 0;
  std::int64_t w = 0;
  double multiplier = 1;
};
ShortCycleShape short_cycle_shape(std::pair<std::int64_t, std::int64_t> base_spatial,
                                  std::pair<double, double> base_factors,
                                  std::pair<std::int64_t, std::int64_t> default_spatial,
                                  const std::vector<double>& short_factors, int m);

CompiledPlan compile(const ScheduleConfig& config);

// The same recipe with both cycles off and epoch multiplier 1.
ScheduleConfig baseline_of(const ScheduleConfig& config);

}  // namespace multigrid
