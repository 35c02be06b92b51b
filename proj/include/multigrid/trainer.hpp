// Copyright 2026 The Multigrid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "multigrid/model.hpp"
#include "multigrid/optimizer.hpp"
#include "multigrid/schedule.hpp"
#include "multigrid/synth_data.hpp"

namespace multigrid {

struct TrainOptions {
  ModelConfig model;
  std::uint64_t seed = 0;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  SpanPolicy span_policy = SpanPolicy::kClamp;
  std::string metrics_path;    // JSON Lines, one object per iteration; empty: none
  std::string checkpoint_dir;  // stage{k}.ckpt after each stage; empty: none
  bool record_timing = false;  // wall_ms is null unless set, keeping logs reproducible
  int threads = 1;             // > 1 prepares the next batch while the current one trains
};

struct TrainResult {
  ModelParams<float> params;
  SgdState<float> optimizer;
  std::vector<float> losses;
  std::vector<double> applied_lr;
  std::vector<std::int64_t> applied_bn_group;
};

// One SGD step per plan record, with the record's shape, LR and BN group.
TrainResult train(const CompiledPlan& plan, const Dataset& data, const TrainOptions& options);

// Same loop starting from given parameters and optimizer state.
TrainResult train_from(const CompiledPlan& plan, const Dataset& data, const TrainOptions& options,
                       ModelParams<float> params, SgdState<float> optimizer);

// Multi-clip testing: per video, `clips` uniformly spaced temporal clips with
// a center spatial crop (source resized so its short side is `short_side`).
struct EvalSettings {
  TargetShape shape{8, 32, 32};
  double short_side = 36;
  int t_stride = 2;
  int clips = 10;
  int top_n = 5;
  int threads = 1;
};

struct EvalResult {
  double top1 = 0;
  double top_n = 0;
  std::int64_t videos = 0;
};

EvalResult evaluate(const ModelConfig& model, const ModelParams<float>& params, const Dataset& data,
                    const EvalSettings& settings);

// Softmax probabilities averaged over the testing clips of one video.
std::vector<double> video_scores(const ModelConfig& model, const ModelParams<float>& params, const Clip& video,
                                 const EvalSettings& settings);

}  // namespace multigrid
