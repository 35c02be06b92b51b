// Copyright 2026 The Multigrid Authors
// SPDX-License-Identifier: Apache-2.0

#include "multigrid/accounting.hpp"

#include <algorithm>
#include <sstream>

#include "json.hpp"
#include "multigrid/error.hpp"

namespace multigrid {
namespace {

double clip_volume(const CompiledPlan& plan) {
  double total = 0;
  for (const auto& r : plan.records) total += static_cast<double>(r.shape.volume());
  return total;
}

nlohmann::json phase_json(const PhaseTotals& p) {
  return {{"iters", p.iters}, {"clips", p.clips}, {"epochs", p.epochs}};
}

}  // namespace

PlanSummary summarize(const CompiledPlan& plan, const CompiledPlan& baseline) {
  if (!(plan.base_shape == baseline.base_shape) || plan.dataset_size != baseline.dataset_size) {
    fail(ErrorCode::kInvalidArgument, "summarize: plan and baseline use different base recipes");
  }
  if (plan.records.empty() || baseline.records.empty() || plan.dataset_size < 1) {
    fail(ErrorCode::kInvalidArgument, "summarize: empty plan");
  }
  PlanSummary s;
  s.total_iters = static_cast<std::int64_t>(plan.records.size());
  s.max_batch = plan.records.front().shape.b;
  s.min_batch = s.max_batch;
  const double dataset = static_cast<double>(plan.dataset_size);
  for (const auto& r : plan.records) {
    s.total_clips += r.shape.b;
    s.max_batch = std::max(s.max_batch, r.shape.b);
    s.min_batch = std::min(s.min_batch, r.shape.b);
    PhaseTotals& p = r.phase == Phase::kCycling ? s.cycling : r.phase == Phase::kFinetune ? s.finetune : s.baseline_phase;
    p.iters += 1;
    p.clips += r.shape.b;
  }
  for (PhaseTotals* p : {&s.cycling, &s.finetune, &s.baseline_phase}) {
    p->epochs = static_cast<double>(p->clips) / dataset;
  }
  s.epochs = static_cast<double>(s.total_clips) / dataset;
  s.flops_proxy = clip_volume(plan);
  s.baseline_flops_proxy = clip_volume(baseline);
  s.baseline_iters = static_cast<std::int64_t>(baseline.records.size());
  s.iteration_ratio_vs_baseline = static_cast<double>(s.baseline_iters) / static_cast<double>(s.total_iters);
  s.flops_proxy_ratio = s.baseline_flops_proxy / s.flops_proxy;
  s.flops_proxy_fraction = s.flops_proxy / s.baseline_flops_proxy;
  return s;
}

std::string summary_json(const PlanSummary& s, int indent) {
  nlohmann::json j = {
      {"total_iters", s.total_iters},
      {"total_clips", s.total_clips},
      {"epochs", s.epochs},
      {"baseline_iters", s.baseline_iters},
      {"iteration_ratio_vs_baseline", s.iteration_ratio_vs_baseline},
      {"flops_proxy", s.flops_proxy},
      {"baseline_flops_proxy", s.baseline_flops_proxy},
      {"flops_proxy_ratio", s.flops_proxy_ratio},
      {"flops_proxy_fraction", s.flops_proxy_fraction},
      {"max_batch", s.max_batch},
      {"min_batch", s.min_batch},
      {"per_phase",
       {{"cycling", phase_json(s.cycling)},
        {"finetune", phase_json(s.finetune)},
        {"baseline", phase_json(s.baseline_phase)}}},
  };
  return j.dump(indent);
}

std::string summary_csv(const std::vector<std::pair<std::string, PlanSummary>>& plans) {
  std::ostringstream os;
  os.precision(17);
  os << "plan,metric,value\n";
  for (const auto& [name, s] : plans) {
    const std::pair<const char*, double> rows[] = {
        {"total_iters", static_cast<double>(s.total_iters)},
        {"total_clips", static_cast<double>(s.total_clips)},
        {"epochs", s.epochs},
        {"iteration_ratio_vs_baseline", s.iteration_ratio_vs_baseline},
        {"flops_proxy", s.flops_proxy},
        {"flops_proxy_ratio", s.flops_proxy_ratio},
        {"flops_proxy_fraction", s.flops_proxy_fraction},
        {"cycling_iters", static_cast<double>(s.cycling.iters)},
        {"finetune_iters", static_cast<double>(s.finetune.iters)},
        {"max_batch", static_cast<double>(s.max_batch)},
        {"min_batch", static_cast<double>(s.min_batch)},
    };
    for (const auto& [metric, value] : rows) os << name << "," << metric << "," << value << "\n";
  }
  return os.str();
}

}  // namespace multigrid
