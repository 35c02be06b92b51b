#pragma once

#include <cmath>

#include "multigrid/schedule.hpp"

namespace fixtures {

// Kinetics-scale baseline: 112k iterations at 512x32x224x224, steps at 44k/72k/92k.
inline multigrid::ScheduleConfig kinetics(bool long_cycle, bool short_cycle, double epochs) {
  multigrid::ScheduleConfig c;
  c.base_shape = {512, 32, 224, 224};
  c.dataset_size = 240000;
  c.lr.stages = {{44000, 0.8}, {28000, 0.08}, {20000, 0.008}, {20000, 0.0008}};
  c.lr.warmup_iters = 16000;
  c.lr.warmup_start_lr = 0.002;
  c.cycles.long_enabled = long_cycle;
  c.cycles.short_enabled = short_cycle;
  c.cycles.epoch_multiplier = epochs;
  return c;
}

// Small recipe with the same stage proportions, cheap to compile many times.
inline multigrid::ScheduleConfig toy(bool long_cycle, bool short_cycle, double epochs) {
  multigrid::ScheduleConfig c;
  c.base_shape = {16, 8, 32, 32};
  c.dataset_size = 2000;
  c.lr.stages = {{600, 0.1}, {380, 0.01}, {260, 0.001}, {260, 0.0001}};
  c.lr.warmup_iters = 100;
  c.lr.warmup_start_lr = 0.01;
  c.cycles.long_enabled = long_cycle;
  c.cycles.short_enabled = short_cycle;
  c.cycles.epoch_multiplier = epochs;
  c.sampling = {36, 48, 2};
  return c;
}

}  // namespace fixtures
