// Copyright 2026 The Multigrid Authors
// SPDX-License-Identifier: Apache-2.0

#include "multigrid/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "multigrid/error.hpp"

namespace multigrid {
namespace {

using nlohmann::json;

// Typed access to one JSON object. Every key read is remembered; finish()
// rejects whatever is left over.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(ErrorCode::kConfig, where("") + ": expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  template <typename T>
  T get(const std::string& key, T fallback) {
    seen_.insert(key);
    if (!j_.contains(key)) return fallback;
    return convert<T>(j_.at(key), key);
  }

  template <typename T>
  T require(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) fail(ErrorCode::kConfig, where(key) + ": required key is missing");
    return convert<T>(j_.at(key), key);
  }

  Section child(const std::string& key) { return Section(raw(key), where(key)); }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) fail(ErrorCode::kConfig, where(key) + ": required key is missing");
    return j_.at(key);
  }

  std::string where(const std::string& key) const {
    if (key.empty()) return path_.empty() ? "<root>" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  void finish() const {
    for (const auto& [key, _] : j_.items()) {
      if (!seen_.count(key)) fail(ErrorCode::kConfig, where(key) + ": unknown key");
    }
  }

 private:
  template <typename T>
  T convert(const json& v, const std::string& key) const {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) fail(ErrorCode::kConfig, where(key) + ": expected a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) fail(ErrorCode::kConfig, where(key) + ": expected an integer");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) fail(ErrorCode::kConfig, where(key) + ": expected a number");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) fail(ErrorCode::kConfig, where(key) + ": expected a string");
    }
    try {
      return v.get<T>();
    } catch (const json::exception&) {
      fail(ErrorCode::kConfig, where(key) + ": value has the wrong type");
    }
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::vector<double> number_list(const json& v, const std::string& where) {
  if (!v.is_array()) fail(ErrorCode::kConfig, where + ": expected an array of numbers");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) fail(ErrorCode::kConfig, where + ": expected an array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

std::vector<int> int_list(const json& v, const std::string& where) {
  if (!v.is_array()) fail(ErrorCode::kConfig, where + ": expected an array of integers");
  std::vector<int> out;
  for (const auto& x : v) {
    if (!x.is_number_integer()) fail(ErrorCode::kConfig, where + ": expected an array of integers");
    out.push_back(x.get<int>());
  }
  return out;
}

std::array<int, 3> int_triple(const json& v, const std::string& where) {
  const auto xs = int_list(v, where);
  if (xs.size() != 3) fail(ErrorCode::kConfig, where + ": expected 3 integers");
  return {xs[0], xs[1], xs[2]};
}

LrSchedule parse_lr(Section s) {
  LrSchedule lr;
  const auto kind = s.get<std::string>("kind", "stepwise");
  if (kind == "stepwise") {
    lr.kind = LrKind::kStepwise;
  } else if (kind == "cosine") {
    lr.kind = LrKind::kCosine;
  } else {
    fail(ErrorCode::kConfig, s.where("kind") + ": expected \"stepwise\" or \"cosine\"");
  }
  const json& stages = s.raw("stages");
  if (!stages.is_array()) fail(ErrorCode::kConfig, s.where("stages") + ": expected an array");
  for (std::size_t k = 0; k < stages.size(); ++k) {
    Section st(stages[k], s.where("stages") + "[" + std::to_string(k) + "]");
    lr.stages.push_back({st.require<std::int64_t>("length"), st.require<double>("lr")});
    st.finish();
  }
  lr.warmup_iters = s.get<std::int64_t>("warmup_iters", 0);
  lr.warmup_start_lr = s.get<double>("warmup_start_lr", 0.0);
  lr.cosine_end_lr = s.get<double>("cosine_end_lr", 0.0);
  s.finish();
  return lr;
}

CycleConfig parse_cycles(Section s) {
  CycleConfig c;
  c.long_enabled = s.get<bool>("long_enabled", c.long_enabled);
  c.short_enabled = s.get<bool>("short_enabled", c.short_enabled);
  if (s.has("long_shapes")) {
    const json& shapes = s.raw("long_shapes");
    if (!shapes.is_array()) fail(ErrorCode::kConfig, s.where("long_shapes") + ": expected an array");
    c.long_shapes.clear();
    for (std::size_t k = 0; k < shapes.size(); ++k) {
      const auto f = number_list(shapes[k], s.where("long_shapes") + "[" + std::to_string(k) + "]");
      if (f.size() != 3) {
        fail(ErrorCode::kConfig, s.where("long_shapes") + "[" + std::to_string(k) + "]: expected [t, h, w] factors");
      }
      c.long_shapes.push_back({f[0], f[1], f[2]});
    }
  }
  const auto design = s.get<std::string>("long_design", "multi-cycle");
  if (design == "multi-cycle") {
    c.long_design = LongDesign::kMultiCycle;
  } else if (design == "single-cycle") {
    c.long_design = LongDesign::kSingleCycle;
  } else {
    fail(ErrorCode::kConfig, s.where("long_design") + ": expected \"multi-cycle\" or \"single-cycle\"");
  }
  if (s.has("short_spatial_factors")) {
    c.short_spatial_factors = number_list(s.raw("short_spatial_factors"), s.where("short_spatial_factors"));
  }
  c.bn_base_group = s.get<std::int64_t>("bn_base_group", c.bn_base_group);
  c.epoch_multiplier = s.get<double>("epoch_multiplier", c.epoch_multiplier);
  c.finetune = s.get<bool>("finetune", c.finetune);
  s.finish();
  return c;
}

SamplingConfig parse_sampling(Section s) {
  SamplingConfig c;
  c.short_side_min = s.get<double>("short_side_min", c.short_side_min);
  c.short_side_max = s.get<double>("short_side_max", c.short_side_max);
  c.t_stride_min = s.get<double>("t_stride_min", c.t_stride_min);
  const auto policy = s.get<std::string>("span_policy", "clamp");
  if (policy == "clamp") {
    c.span_policy = SpanPolicy::kClamp;
  } else if (policy == "reject") {
    c.span_policy = SpanPolicy::kReject;
  } else {
    fail(ErrorCode::kConfig, s.where("span_policy") + ": expected \"clamp\" or \"reject\"");
  }
  s.finish();
  return c;
}

void parse_data(Section s, ExperimentConfig& cfg) {
  SynthSpec spec;
  spec.num_videos = s.get<std::int64_t>("num_videos", spec.num_videos);
  spec.num_directions = s.get<int>("num_directions", spec.num_directions);
  if (s.has("speeds")) spec.speeds = number_list(s.raw("speeds"), s.where("speeds"));
  spec.frames = s.get<int>("frames", spec.frames);
  spec.height = s.get<int>("height", spec.height);
  spec.width = s.get<int>("width", spec.width);
  spec.blob_sigma = s.get<double>("blob_sigma", spec.blob_sigma);
  spec.noise = s.get<double>("noise", spec.noise);
  spec.seed = s.get<std::uint64_t>("seed", spec.seed);
  SynthSpec val = spec;
  val.num_videos = s.get<std::int64_t>("val_videos", 500);
  val.seed = s.get<std::uint64_t>("val_seed", spec.seed + 1);
  s.finish();
  spec.validate();
  val.validate();
  cfg.train_data = spec;
  cfg.val_data = val;
}

void parse_model(Section s, ModelConfig& m) {
  if (s.has("channels")) m.channels = int_list(s.raw("channels"), s.where("channels"));
  if (s.has("stem_kernel")) m.stem_kernel = int_triple(s.raw("stem_kernel"), s.where("stem_kernel"));
  if (s.has("stem_stride")) m.stem_stride = int_triple(s.raw("stem_stride"), s.where("stem_stride"));
  m.block_kernel = s.get<int>("block_kernel", m.block_kernel);
  s.finish();
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::kConfig, std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  Section s(root, "");

  Section shape = s.child("base_shape");
  cfg.schedule.base_shape = {shape.require<std::int64_t>("b"), shape.require<std::int64_t>("t"),
                             shape.require<std::int64_t>("h"), shape.require<std::int64_t>("w")};
  shape.finish();
  cfg.schedule.lr = parse_lr(s.child("lr"));
  if (s.has("cycles")) cfg.schedule.cycles = parse_cycles(s.child("cycles"));
  if (s.has("sampling")) cfg.schedule.sampling = parse_sampling(s.child("sampling"));
  if (s.has("data")) parse_data(s.child("data"), cfg);
  if (s.has("model")) parse_model(s.child("model"), cfg.model);
  if (cfg.train_data) cfg.model.num_classes = cfg.train_data->num_classes();

  const std::int64_t fallback_size = cfg.train_data ? cfg.train_data->num_videos : 0;
  cfg.schedule.dataset_size = s.get<std::int64_t>("dataset_size", fallback_size);
  if (cfg.schedule.dataset_size < 1) fail(ErrorCode::kConfig, "dataset_size: required (or give a data section)");

  if (s.has("train")) {
    Section t = s.child("train");
    cfg.momentum = t.get<double>("momentum", cfg.momentum);
    cfg.weight_decay = t.get<double>("weight_decay", cfg.weight_decay);
    t.finish();
  }

  const Shape4D& base = cfg.schedule.base_shape;
  cfg.eval.shape = {static_cast<int>(base.t), static_cast<int>(base.h), static_cast<int>(base.w)};
  cfg.eval.short_side = cfg.schedule.sampling.short_side_min;
  cfg.eval.t_stride = std::max(1, static_cast<int>(std::lround(cfg.schedule.sampling.t_stride_min)));
  if (s.has("eval")) {
    Section e = s.child("eval");
    cfg.eval.clips = e.get<int>("clips", cfg.eval.clips);
    cfg.eval.short_side = e.get<double>("short_side", cfg.eval.short_side);
    cfg.eval.t_stride = e.get<int>("t_stride", cfg.eval.t_stride);
    cfg.eval.top_n = e.get<int>("top_n", cfg.eval.top_n);
    e.finish();
  }
  s.finish();

  const ScheduleConfig& sc = cfg.schedule;
  sc.base_shape.validate();
  sc.cycles.validate();
  sc.lr.validate(sc.cycles.finetune && sc.cycles.any_cycle());
  sc.sampling.validate();
  cfg.model.validate();
  if (cfg.train_data) cfg.train_data->validate();
  if (cfg.val_data) cfg.val_data->validate();
  if (cfg.eval.clips < 1) fail(ErrorCode::kConfig, "eval.clips: must be >= 1");
  if (cfg.eval.top_n < 1) fail(ErrorCode::kConfig, "eval.top_n: must be >= 1");
  if (!(cfg.eval.short_side > 0) || cfg.eval.t_stride < 1) {
    fail(ErrorCode::kConfig, "eval.short_side/t_stride: must be positive");
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open config " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_experiment_config(buf.str());
}

}  // namespace multigrid
