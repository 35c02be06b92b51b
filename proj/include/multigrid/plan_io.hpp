// Copyright 2026 The Multigrid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <ostream>
#include <string>

#include "multigrid/schedule.hpp"

namespace multigrid {

// One JSON object per record: iter, phase, long_idx, short_m, b, t, h, w, lr,
// bn_group, lr_stage, cum_clips, epoch. Inactive cycle indices are null.
std::string record_json(const CompiledPlan& plan, const IterationRecord& r);
void write_plan_jsonl(std::ostream& out, const CompiledPlan& plan);
void write_plan_jsonl(const std::string& path, const CompiledPlan& plan);

}  // namespace multigrid
