// Copyright 2026 The Multigrid Authors
// SPDX-License-Identifier: Apache-2.0

#include "multigrid/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "multigrid/checkpoint.hpp"
#include "multigrid/error.hpp"
#include "multigrid/nn.hpp"

namespace multigrid {
namespace {

std::string describe(const IterationRecord& r) {
  std::ostringstream os;
  os << "iter " << r.iter << " (" << phase_name(r.phase) << ", shape " << r.shape.b << "x" << r.shape.t << "x"
     << r.shape.h << "x" << r.shape.w << ", lr " << r.lr << ", bn_group " << r.bn_group << ")";
  return os.str();
}

void save_stage(const TrainOptions& opt, const TrainResult& res, int stage, std::uint64_t next_iter) {
  if (opt.checkpoint_dir.empty()) return;
  std::filesystem::create_directories(opt.checkpoint_dir);
  Checkpoint ckpt{opt.model, res.params, res.optimizer, opt.seed, next_iter};
  save_checkpoint((std::filesystem::path(opt.checkpoint_dir) / ("stage" + std::to_string(stage) + ".ckpt")).string(),
                  ckpt);
}

}  // namespace

TrainResult train(const CompiledPlan& plan, const Dataset& data, const TrainOptions& options) {
  ModelParams<float> params = init_params<float>(options.model, options.seed);
  auto state = SgdState<float>::zeros_like(params.tensors, options.momentum, options.weight_decay);
  return train_from(plan, data, options, std::move(params), std::move(state));
}

TrainResult train_from(const CompiledPlan& plan, const Dataset& data, const TrainOptions& options,
                       ModelParams<float> params, SgdState<float> optimizer) {
  options.model.validate();
  if (data.num_classes != options.model.num_classes) {
    fail(ErrorCode::kConfig, "model.num_classes does not match the dataset");
  }
  for (const auto& r : plan.records) {
    check_input_shape(options.model, {r.shape.b, r.shape.t, r.shape.h, r.shape.w, options.model.in_channels});
    if (r.bn_group < 1 || r.shape.b % r.bn_group != 0) {
      fail(ErrorCode::kConfig, "plan record " + describe(r) + " has a BN group that does not divide its batch");
    }
  }

  std::ofstream metrics;
  if (!options.metrics_path.empty()) {
    metrics.open(options.metrics_path, std::ios::trunc);
    if (!metrics) fail(ErrorCode::kIo, "cannot open " + options.metrics_path);
  }

  TrainResult res;
  res.params = std::move(params);
  res.optimizer = std::move(optimizer);
  const auto& records = plan.records;
  res.losses.reserve(records.size());

  auto load = [&](std::size_t i) { return next_batch(data, records[i], options.seed, options.span_policy); };
  const bool prefetch = options.threads > 1;
  std::future<Batch> pending;
  if (prefetch && !records.empty()) pending = std::async(std::launch::async, load, 0);

  for (std::size_t i = 0; i < records.size(); ++i) {
    const IterationRecord& r = records[i];
    const auto t0 = std::chrono::steady_clock::now();
    Batch batch = prefetch ? pending.get() : load(i);
    if (prefetch && i + 1 < records.size()) pending = std::async(std::launch::async, load, i + 1);

    LossAndGrads<float> lg = forward_backward(options.model, res.params, batch.data, batch.labels, r.bn_group);
    if (!std::isfinite(lg.loss)) fail(ErrorCode::kNumeric, "non-finite loss at " + describe(r));
    sgd_step(res.params.tensors, lg.grads, res.optimizer, r.lr);

    res.losses.push_back(lg.loss);
    res.applied_lr.push_back(r.lr);
    res.applied_bn_group.push_back(r.bn_group);

    if (metrics.is_open()) {
      nlohmann::ordered_json row = {{"iter", r.iter},       {"loss", lg.loss},          {"lr", r.lr},
                            {"b", r.shape.b},       {"t", r.shape.t},           {"h", r.shape.h},
                            {"w", r.shape.w},       {"bn_group", r.bn_group},   {"cum_clips", r.cum_clips},
                            {"wall_ms", nullptr}};
      if (options.record_timing) {
        row["wall_ms"] =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      }
      metrics << row.dump() << "\n";
    }
    if (i + 1 == records.size() || records[i + 1].stage != r.stage) save_stage(options, res, r.stage, i + 1);
  }
  return res;
}

std::vector<double> video_scores(const ModelConfig& model, const ModelParams<float>& params, const Clip& video,
                                 const EvalSettings& s) {
  const SourceShape src{video.frames, video.height, video.width};
  const std::size_t per_clip = static_cast<std::size_t>(s.shape.t) * s.shape.h * s.shape.w * video.channels;
  Tensor<float> batch({s.clips, s.shape.t, s.shape.h, s.shape.w, video.channels});
  for (int j = 0; j < s.clips; ++j) {
    const GridSpec g = testing_grid(src, s.shape, s.short_side, s.t_stride, j, s.clips);
    resample_into(video, g, std::span<float>(batch.ptr() + j * per_clip, per_clip));
  }
  const Tensor<float> probs = nn::softmax(forward_eval(model, params, batch));
  const std::int64_t k = probs.dim(1);
  std::vector<double> avg(static_cast<std::size_t>(k), 0.0);
  for (int j = 0; j < s.clips; ++j) {
    for (std::int64_t c = 0; c < k; ++c) avg[c] += probs.data[j * k + c];
  }
  for (auto& v : avg) v /= s.clips;
  return avg;
}

EvalResult evaluate(const ModelConfig& model, const ModelParams<float>& params, const Dataset& data,
                    const EvalSettings& s) {
  if (s.clips < 1) fail(ErrorCode::kInvalidArgument, "evaluate: clips must be >= 1");
  const std::size_t n = data.size();
  std::vector<std::uint8_t> hit1(n, 0), hitn(n, 0);
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t v = begin; v < end; ++v) {
      const std::vector<double> scores = video_scores(model, params, data.clips[v], s);
      const int label = data.labels[v];
      // Rank = number of classes scoring strictly higher, ties favoring lower indices.
      int rank = 0;
      for (std::size_t c = 0; c < scores.size(); ++c) {
        if (scores[c] > scores[label] || (scores[c] == scores[label] && static_cast<int>(c) < label)) ++rank;
      }
      hit1[v] = rank == 0;
      hitn[v] = rank < s.top_n;
    }
  };
  const int threads = std::max(1, std::min<int>(s.threads, static_cast<int>(n)));
  if (threads == 1) {
    work(0, n);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(work, n * t / threads, n * (t + 1) / threads);
    for (auto& th : pool) th.join();
  }
  EvalResult r;
  r.videos = static_cast<std::int64_t>(n);
  for (std::size_t v = 0; v < n; ++v) {
    r.top1 += hit1[v];
    r.top_n += hitn[v];
  }
  if (n > 0) {
    r.top1 /= static_cast<double>(n);
    r.top_n /= static_cast<double>(n);
  }
  return r;
}

}  // namespace multigrid
