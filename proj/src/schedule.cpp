// Copyright 2026 The Multigrid Authors
// SPDX-License-Identifier: Apache-2.0

#include "multigrid/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "multigrid/error.hpp"

namespace multigrid {
namespace {

constexpr double kFactorTolerance = 1e-12;

// Multipliers built from irrational factors (1/sqrt(2)) land within a few ulps
// of an integer; snap them so 8x, 4x, 2x come out exact.
double snap(double x) {
  const double r = std::round(x);
  return std::abs(x - r) <= 1e-6 * std::max(1.0, std::abs(x)) ? r : x;
}

std::int64_t spatial_dim(std::int64_t full, double factor) {
  if (factor >= 1.0 - kFactorTolerance) return full;
  return std::min(full, round_spatial(static_cast<double>(full) * factor));
}

std::int64_t temporal_dim(std::int64_t full, double factor) {
  if (factor >= 1.0 - kFactorTolerance) return full;
  return std::max<std::int64_t>(1, std::llround(static_cast<double>(full) * factor));
}

// Index of the part containing offset `o` when `n` iterations are split into
// `parts` equal parts with the remainder going to the later parts.
int part_index(std::int64_t o, std::int64_t n, int parts) {
  const std::int64_t base = n / parts;
  const std::int64_t rem = n % parts;
  const std::int64_t small = parts - rem;
  if (base == 0) return static_cast<int>(small + o);
  if (o < small * base) return static_cast<int>(o / base);
  return static_cast<int>(small + (o - small * base) / (base + 1));
}

struct Layout {
  std::int64_t total = 0;
  std::vector<std::int64_t> stage_start;  // size L + 1
  std::int64_t warmup = 0;
  bool finetune = false;
  int cycling_stages = 0;
};

Layout make_layout(const ScheduleConfig& cfg, std::int64_t total) {
  const auto& stages = cfg.lr.stages;
  const int num_stages = static_cast<int>(stages.size());
  const std::int64_t base_total = cfg.lr.base_total_iters();
  Layout lay;
  lay.total = total;
  lay.stage_start.assign(num_stages + 1, 0);
  std::int64_t acc = 0;
  for (int k = 0; k + 1 < num_stages; ++k) {
    const std::int64_t n = std::llround(static_cast<double>(total) *
                                        static_cast<double>(stages[k].length) /
                                        static_cast<double>(base_total));
    acc = std::min(total, acc + n);
    lay.stage_start[k + 1] = acc;
  }
  lay.stage_start[num_stages] = total;
  lay.warmup = std::llround(static_cast<double>(cfg.lr.warmup_iters) * static_cast<double>(total) /
                            static_cast<double>(base_total));
  lay.finetune = cfg.cycles.finetune && cfg.cycles.any_cycle();
  lay.cycling_stages = lay.finetune ? num_stages - 1 : num_stages;
  return lay;
}

void check_layout(const ScheduleConfig& cfg, const Layout& lay) {
  if (!cfg.cycles.long_enabled) return;
  const int shapes = static_cast<int>(cfg.cycles.long_shapes.size());
  auto too_short = [&](const std::string& what, std::int64_t n) {
    std::ostringstream os;
    os << "cycles.long_shapes: " << what << " has " << n << " iterations after scaling to "
       << lay.total << " total; at least " << shapes << " are needed (one per long-cycle shape)";
    fail(ErrorCode::kConfig, os.str());
  };
  if (cfg.cycles.long_design == LongDesign::kMultiCycle) {
    for (int k = 0; k < lay.cycling_stages; ++k) {
      const std::int64_t n = lay.stage_start[k + 1] - lay.stage_start[k];
      if (n < shapes) too_short("stage " + std::to_string(k), n);
    }
  } else {
    const std::int64_t n = lay.stage_start[lay.cycling_stages];
    if (n < shapes) too_short("the cycling phase", n);
  }
}

double scheduled_lr(const ScheduleConfig& cfg, const Layout& lay, std::int64_t i, int lr_stage) {
  if (cfg.lr.kind == LrKind::kStepwise) return cfg.lr.stages[lr_stage].lr;
  const double top = cfg.lr.stages.front().lr;
  const double end = cfg.lr.cosine_end_lr;
  const double progress = static_cast<double>(i) / static_cast<double>(lay.total);
  return end + (top - end) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

IterationRecord make_record(const ScheduleConfig& cfg, const Layout& lay, std::int64_t i) {
  const auto& cyc = cfg.cycles;
  const Shape4D& base = cfg.base_shape;
  const int num_stages = static_cast<int>(cfg.lr.stages.size());

  IterationRecord r;
  r.iter = i;
  r.stage = static_cast<int>(std::upper_bound(lay.stage_start.begin() + 1, lay.stage_start.end(), i) -
                             (lay.stage_start.begin() + 1));
  r.stage = std::min(r.stage, num_stages - 1);
  r.lr_stage = r.stage;

  if (!cyc.any_cycle()) {
    r.phase = Phase::kBaseline;
  } else if (lay.finetune && r.stage == num_stages - 1) {
    r.phase = Phase::kFinetune;
    const std::int64_t start = lay.stage_start[r.stage];
    const std::int64_t n = lay.stage_start[r.stage + 1] - start;
    r.lr_stage = (i - start < n / 2) ? num_stages - 2 : num_stages - 1;
  } else {
    r.phase = Phase::kCycling;
  }

  ShapeFactors factors;
  if (r.phase == Phase::kCycling && cyc.long_enabled) {
    const int shapes = static_cast<int>(cyc.long_shapes.size());
    if (cyc.long_design == LongDesign::kMultiCycle) {
      const std::int64_t start = lay.stage_start[r.stage];
      r.long_idx = part_index(i - start, lay.stage_start[r.stage + 1] - start, shapes);
    } else {
      r.long_idx = part_index(i, lay.stage_start[lay.cycling_stages], shapes);
    }
    factors = cyc.long_shapes[r.long_idx];
    r.long_multiplier = snap(1.0 / (factors.t * factors.h * factors.w));
  }

  r.shape.t = temporal_dim(base.t, factors.t);
  r.shape.h = spatial_dim(base.h, factors.h);
  r.shape.w = spatial_dim(base.w, factors.w);

  if (r.phase != Phase::kBaseline && cyc.short_enabled) {
    const int period = static_cast<int>(cyc.short_spatial_factors.size());
    r.short_m = static_cast<int>(i % period);
    const ShortCycleShape s = short_cycle_shape({r.shape.h, r.shape.w}, {factors.h, factors.w},
                                                {base.h, base.w}, cyc.short_spatial_factors, r.short_m);
    r.shape.h = s.h;
    r.shape.w = s.w;
    r.short_multiplier = s.multiplier;
  }

  r.shape.b = std::max<std::int64_t>(
      1, std::llround(static_cast<double>(base.b) * r.long_multiplier * r.short_multiplier));

  r.bn_group = std::min<std::int64_t>(cyc.bn_base_group * std::llround(r.short_multiplier), r.shape.b);

  const double target = scheduled_lr(cfg, lay, i, r.lr_stage) * r.long_multiplier;
  if (i < lay.warmup) {
    const double start = cfg.lr.warmup_start_lr;
    r.lr = start + (target - start) * static_cast<double>(i) / static_cast<double>(lay.warmup);
  } else {
    r.lr = target;
  }

  const auto& smp = cfg.sampling;
  r.sample_ranges.short_side_min = static_cast<double>(
      std::llround(smp.short_side_min * static_cast<double>(r.shape.h) / static_cast<double>(base.h)));
  r.sample_ranges.short_side_max = smp.short_side_max;
  r.sample_ranges.t_stride_min = smp.t_stride_min;
  r.sample_ranges.t_stride_max =
      smp.t_stride_min * static_cast<double>(base.t) / static_cast<double>(r.shape.t);
  return r;
}

std::vector<IterationRecord> build_records(const ScheduleConfig& cfg, std::int64_t total) {
  const Layout lay = make_layout(cfg, total);
  std::vector<IterationRecord> records;
  records.reserve(static_cast<std::size_t>(total));
  std::int64_t clips = 0;
  for (std::int64_t i = 0; i < total; ++i) {
    IterationRecord r = make_record(cfg, lay, i);
    clips += r.shape.b;
    r.cum_clips = clips;
    records.push_back(r);
  }
  return records;
}

std::int64_t count_clips(const ScheduleConfig& cfg, std::int64_t total) {
  const Layout lay = make_layout(cfg, total);
  std::int64_t clips = 0;
  for (std::int64_t i = 0; i < total; ++i) clips += make_record(cfg, lay, i).shape.b;
  return clips;
}

}  // namespace

void Shape4D::validate() const {
  if (b < 1 || t < 1 || h < 1 || w < 1) {
    fail(ErrorCode::kConfig, "base_shape: every dimension must be >= 1");
  }
}

std::int64_t LrSchedule::base_total_iters() const {
  std::int64_t total = 0;
  for (const auto& s : stages) total += s.length;
  return total;
}

void LrSchedule::validate(bool finetune) const {
  if (stages.empty()) fail(ErrorCode::kConfig, "lr.stages: at least one stage is required");
  if (finetune && stages.size() < 2) {
    fail(ErrorCode::kConfig,
         "lr.stages: fine-tuning needs at least 2 LR stages (got " + std::to_string(stages.size()) +
             "); disable cycles.finetune or add a stage");
  }
  for (std::size_t k = 0; k < stages.size(); ++k) {
    if (stages[k].length < 1 || !(stages[k].lr > 0)) {
      fail(ErrorCode::kConfig, "lr.stages[" + std::to_string(k) + "]: length and lr must be positive");
    }
  }
  if (warmup_iters < 0 || warmup_iters >= base_total_iters()) {
    fail(ErrorCode::kConfig, "lr.warmup_iters: must be in [0, total stage iterations)");
  }
  if (warmup_iters > 0 && !(warmup_start_lr > 0)) {
    fail(ErrorCode::kConfig, "lr.warmup_start_lr: must be positive when warmup is used");
  }
  if (kind == LrKind::kCosine && (cosine_end_lr < 0 || cosine_end_lr > stages.front().lr)) {
    fail(ErrorCode::kConfig, "lr.cosine_end_lr: must lie in [0, first stage lr]");
  }
}

std::vector<ShapeFactors> CycleConfig::default_long_shapes() {
  const double r = 1.0 / std::numbers::sqrt2;
  return {{0.25, r, r}, {0.5, r, r}, {0.5, 1.0, 1.0}, {1.0, 1.0, 1.0}};
}

std::vector<double> CycleConfig::default_short_factors() {
  return {0.5, 1.0 / std::numbers::sqrt2, 1.0};
}

void CycleConfig::validate() const {
  auto in_unit = [](double f) { return f > 0.0 && f <= 1.0; };
  if (long_enabled) {
    if (long_shapes.empty()) fail(ErrorCode::kConfig, "cycles.long_shapes: must not be empty");
    for (std::size_t s = 0; s < long_shapes.size(); ++s) {
      const auto& f = long_shapes[s];
      if (!in_unit(f.t) || !in_unit(f.h) || !in_unit(f.w)) {
        fail(ErrorCode::kConfig,
             "cycles.long_shapes[" + std::to_string(s) + "]: factors must lie in (0, 1]");
      }
      if (s > 0) {
        const auto& p = long_shapes[s - 1];
        if (f.t < p.t || f.h < p.h || f.w < p.w) {
          fail(ErrorCode::kConfig, "cycles.long_shapes[" + std::to_string(s) +
                                       "]: shapes must be non-decreasing in every dimension");
        }
      }
    }
  }
  if (short_enabled) {
    if (short_spatial_factors.empty()) {
      fail(ErrorCode::kConfig, "cycles.short_spatial_factors: must not be empty");
    }
    for (double f : short_spatial_factors) {
      if (!in_unit(f)) fail(ErrorCode::kConfig, "cycles.short_spatial_factors: factors must lie in (0, 1]");
    }
  }
  if (bn_base_group < 1) fail(ErrorCode::kConfig, "cycles.bn_base_group: must be >= 1");
  if (!(epoch_multiplier > 0)) fail(ErrorCode::kConfig, "cycles.epoch_multiplier: must be positive");
}

void SamplingConfig::validate() const {
  if (!(short_side_min > 0) || short_side_min > short_side_max) {
    fail(ErrorCode::kConfig, "sampling.short_side_min/max: need 0 < min <= max");
  }
  if (!(t_stride_min > 0)) fail(ErrorCode::kConfig, "sampling.t_stride_min: must be positive");
}

const char* phase_name(Phase p) {
  switch (p) {
    case Phase::kCycling: return "cycling";
    case Phase::kFinetune: return "finetune";
    case Phase::kBaseline: return "baseline";
  }
  return "unknown";
}

std::int64_t scaled_batch(const Shape4D& base, double t, double h, double w) {
  if (t < 1 || h < 1 || w < 1) fail(ErrorCode::kInvalidArgument, "scaled_batch: t, h, w must be >= 1");
  const double b = static_cast<double>(base.b) * (static_cast<double>(base.t) / t) *
                   (static_cast<double>(base.h) / h) * (static_cast<double>(base.w) / w);
  return std::max<std::int64_t>(1, std::llround(b));
}

std::int64_t round_spatial(double x) {
  return std::max<std::int64_t>(2, 2 * std::llround(x / 2.0));
}

ShortCycleShape short_cycle_shape(std::pair<std::int64_t, std::int64_t> base_spatial,
                                  std::pair<double, double> base_factors,
                                  std::pair<std::int64_t, std::int64_t> default_spatial,
                                  const std::vector<double>& short_factors, int m) {
  if (m < 0 || m >= static_cast<int>(short_factors.size())) {
    fail(ErrorCode::kInvalidArgument, "short_cycle_shape: m out of range");
  }
  const double f = short_factors[m];
  auto axis = [f](std::int64_t base, double base_factor, std::int64_t full, double& ratio) {
    if (f >= base_factor - kFactorTolerance) {
      ratio = 1.0;
      return base;
    }
    ratio = base_factor / f;
    return std::min(base, round_spatial(static_cast<double>(full) * f));
  };
  double rh = 1, rw = 1;
  ShortCycleShape s;
  s.h = axis(base_spatial.first, base_factors.first, default_spatial.first, rh);
  s.w = axis(base_spatial.second, base_factors.second, default_spatial.second, rw);
  s.multiplier = snap(rh * rw);
  return s;
}

ScheduleConfig baseline_of(const ScheduleConfig& config) {
  ScheduleConfig b = config;
  b.cycles.long_enabled = false;
  b.cycles.short_enabled = false;
  b.cycles.epoch_multiplier = 1.0;
  return b;
}

CompiledPlan compile(const ScheduleConfig& cfg) {
  cfg.base_shape.validate();
  if (cfg.dataset_size < 1) fail(ErrorCode::kConfig, "dataset_size: must be >= 1");
  cfg.cycles.validate();
  cfg.lr.validate(cfg.cycles.finetune && cfg.cycles.any_cycle());
  cfg.sampling.validate();

  const std::int64_t base_total = cfg.lr.base_total_iters();
  const double target = cfg.cycles.epoch_multiplier * static_cast<double>(base_total) *
                        static_cast<double>(cfg.base_shape.b);

  // Closed-form estimate from the average clips per iteration, then a local
  // search on the exact clip count.
  const std::int64_t probe = std::max<std::int64_t>(
      1, std::llround(cfg.cycles.epoch_multiplier * static_cast<double>(base_total)));
  const double avg = static_cast<double>(count_clips(cfg, probe)) / static_cast<double>(probe);
  std::int64_t total = std::max<std::int64_t>(1, std::llround(target / avg));
  auto miss = [&](std::int64_t n) { return std::abs(static_cast<double>(count_clips(cfg, n)) - target); };
  double best = miss(total);
  for (int dir : {+1, -1}) {
    for (int step = 0; step < 10000; ++step) {
      const std::int64_t next = total + dir;
      if (next < 1) break;
      const double m = miss(next);
      if (m >= best) break;
      best = m;
      total = next;
    }
  }

  const Layout lay = make_layout(cfg, total);
  check_layout(cfg, lay);

  CompiledPlan plan;
  plan.records = build_records(cfg, total);
  plan.base_shape = cfg.base_shape;
  plan.dataset_size = cfg.dataset_size;
  plan.baseline_iters = base_total;
  plan.epoch_multiplier = cfg.cycles.epoch_multiplier;

  for (const auto& r : plan.records) {
    if (r.shape.b % r.bn_group != 0) {
      std::ostringstream os;
      os << "cycles.bn_base_group: BN group " << r.bn_group << " does not divide batch " << r.shape.b
         << " at iteration " << r.iter;
      fail(ErrorCode::kConfig, os.str());
    }
  }
  return plan;
}

}  // namespace multigrid
