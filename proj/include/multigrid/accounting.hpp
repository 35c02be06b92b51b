// Copyright 2026 The Multigrid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "multigrid/schedule.hpp"

namespace multigrid {

struct PhaseTotals {
  std::int64_t iters = 0;
  std::int64_t clips = 0;
  double epochs = 0;
};

struct PlanSummary {
  std::int64_t total_iters = 0;
  std::int64_t total_clips = 0;
  double epochs = 0;
  // Sum over records of b*t*h*w.
  double flops_proxy = 0;
  double baseline_flops_proxy = 0;
  std::int64_t baseline_iters = 0;
  // Reduction factors: baseline / plan.
  double iteration_ratio_vs_baseline = 1;
  double flops_proxy_ratio = 1;
  // plan / baseline, the share of the baseline's clip-volume compute used.
  double flops_proxy_fraction = 1;
  PhaseTotals cycling;
  PhaseTotals finetune;
  PhaseTotals baseline_phase;
  std::int64_t max_batch = 0;
  std::int64_t min_batch = 0;
};

// Exact accounting of `plan` against `baseline`; both must share base shape
// and dataset size.
PlanSummary summarize(const CompiledPlan& plan, const CompiledPlan& baseline);

std::string summary_json(const PlanSummary& s, int indent = 2);

// "plan,metric,value" rows for trade-off plots; one header line first.
std::string summary_csv(const std::vector<std::pair<std::string, PlanSummary>>& plans);

}  // namespace multigrid
