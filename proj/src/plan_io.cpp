// Copyright 2026 The Multigrid Authors
// SPDX-License-Identifier: Apache-2.0

#include "multigrid/plan_io.hpp"

#include <fstream>

#include "json.hpp"
#include "multigrid/error.hpp"

namespace multigrid {

std::string record_json(const CompiledPlan& plan, const IterationRecord& r) {
  nlohmann::ordered_json j;
  j["iter"] = r.iter;
  j["phase"] = phase_name(r.phase);
  j["long_idx"] = r.long_idx < 0 ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(r.long_idx);
  j["short_m"] = r.short_m < 0 ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(r.short_m);
  j["b"] = r.shape.b;
  j["t"] = r.shape.t;
  j["h"] = r.shape.h;
  j["w"] = r.shape.w;
  j["lr"] = r.lr;
  j["bn_group"] = r.bn_group;
  j["lr_stage"] = r.lr_stage;
  j["cum_clips"] = r.cum_clips;
  j["epoch"] = plan.epoch_at(r);
  return j.dump();
}

void write_plan_jsonl(std::ostream& out, const CompiledPlan& plan) {
  for (const auto& r : plan.records) out << record_json(plan, r) << '\n';
}

void write_plan_jsonl(const std::string& path, const CompiledPlan& plan) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot open " + path + " for writing");
  write_plan_jsonl(out, plan);
  if (!out) fail(ErrorCode::kIo, "failed writing " + path);
}

}  // namespace multigrid
