// Copyright 2026 The Multigrid Authors
// SPDX-License-Identifier: Apache-2.0

#include "multigrid/multigrid.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <string>

#include "multigrid/accounting.hpp"
#include "multigrid/checkpoint.hpp"
#include "multigrid/clip_io.hpp"
#include "multigrid/config.hpp"
#include "multigrid/error.hpp"
#include "multigrid/plan_io.hpp"
#include "multigrid/schedule.hpp"
#include "multigrid/synth_data.hpp"
#include "multigrid/trainer.hpp"

struct mg_config_s {
  multigrid::ExperimentConfig cfg;
};
struct mg_plan_s {
  multigrid::CompiledPlan plan;
};
struct mg_clip_s {
  multigrid::Clip clip;
};
struct mg_dataset_s {
  multigrid::Dataset data;
};
struct mg_model_s {
  multigrid::Checkpoint ckpt;
};

namespace {

thread_local std::string g_last_error;

mg_status to_status(multigrid::ErrorCode code) {
  using multigrid::ErrorCode;
  switch (code) {
    case ErrorCode::kInvalidArgument: return MG_ERR_INVALID_ARGUMENT;
    case ErrorCode::kOutOfBounds: return MG_ERR_OUT_OF_BOUNDS;
    case ErrorCode::kInvalidGrid: return MG_ERR_INVALID_GRID;
    case ErrorCode::kConfig: return MG_ERR_CONFIG;
    case ErrorCode::kShape: return MG_ERR_SHAPE;
    case ErrorCode::kIo: return MG_ERR_IO;
    case ErrorCode::kNumeric: return MG_ERR_NUMERIC;
  }
  return MG_ERR_INTERNAL;
}

template <typename Fn>
mg_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return MG_OK;
  } catch (const multigrid::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return MG_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return MG_ERR_INTERNAL;
  }
}

void require(bool ok, const char* what) {
  if (!ok) multigrid::fail(multigrid::ErrorCode::kInvalidArgument, what);
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

multigrid::TrainOptions train_options(const multigrid::ExperimentConfig& cfg, const mg_train_options* o) {
  multigrid::TrainOptions opt;
  opt.model = cfg.model;
  opt.momentum = cfg.momentum;
  opt.weight_decay = cfg.weight_decay;
  opt.span_policy = cfg.schedule.sampling.span_policy;
  if (o) {
    opt.seed = o->seed;
    if (o->metrics_path) opt.metrics_path = o->metrics_path;
    if (o->checkpoint_dir) opt.checkpoint_dir = o->checkpoint_dir;
    opt.record_timing = o->record_timing != 0;
    opt.threads = o->threads;
  }
  return opt;
}

}  // namespace

extern "C" {

const char* mg_version(void) { return "0.1.0"; }

const char* mg_status_string(mg_status status) {
  switch (status) {
    case MG_OK: return "ok";
    case MG_ERR_INVALID_ARGUMENT: return "invalid argument";
    case MG_ERR_OUT_OF_BOUNDS: return "precondition violation";
    case MG_ERR_INVALID_GRID: return "invalid grid";
    case MG_ERR_CONFIG: return "config error";
    case MG_ERR_SHAPE: return "shape error";
    case MG_ERR_IO: return "i/o error";
    case MG_ERR_NUMERIC: return "numeric error";
    case MG_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* mg_last_error(void) { return g_last_error.c_str(); }

void mg_string_free(char* s) { std::free(s); }

// ----------------------------------------------------------------------------
// Configuration
//

mg_status mg_config_load(const char* path, mg_config* out) {
  return guarded([&] {
    require(path && out, "mg_config_load: null argument");
    *out = new mg_config_s{multigrid::load_experiment_config(path)};
  });
}

mg_status mg_config_parse(const char* json_text, mg_config* out) {
  return guarded([&] {
    require(json_text && out, "mg_config_parse: null argument");
    *out = new mg_config_s{multigrid::parse_experiment_config(json_text)};
  });
}

void mg_config_destroy(mg_config config) { delete config; }

// ----------------------------------------------------------------------------
// Plans
//

mg_status mg_plan_compile(mg_config config, mg_plan* out) {
  return guarded([&] {
    require(config && out, "mg_plan_compile: null argument");
    *out = new mg_plan_s{multigrid::compile(config->cfg.schedule)};
  });
}

mg_status mg_plan_compile_baseline(mg_config config, mg_plan* out) {
  return guarded([&] {
    require(config && out, "mg_plan_compile_baseline: null argument");
    *out = new mg_plan_s{multigrid::compile(multigrid::baseline_of(config->cfg.schedule))};
  });
}

void mg_plan_destroy(mg_plan plan) { delete plan; }

mg_status mg_plan_size(mg_plan plan, size_t* out) {
  return guarded([&] {
    require(plan && out, "mg_plan_size: null argument");
    *out = plan->plan.records.size();
  });
}

mg_status mg_plan_record(mg_plan plan, size_t index, mg_iteration_record* out) {
  return guarded([&] {
    require(plan && out, "mg_plan_record: null argument");
    if (index >= plan->plan.records.size()) {
      multigrid::fail(multigrid::ErrorCode::kOutOfBounds, "mg_plan_record: index past the end of the plan");
    }
    const auto& r = plan->plan.records[index];
    mg_iteration_record rec{};
    rec.iter = r.iter;
    rec.phase = static_cast<int32_t>(r.phase);
    rec.long_idx = r.long_idx;
    rec.short_m = r.short_m;
    rec.lr_stage = r.lr_stage;
    rec.b = r.shape.b;
    rec.t = r.shape.t;
    rec.h = r.shape.h;
    rec.w = r.shape.w;
    rec.lr = r.lr;
    rec.bn_group = r.bn_group;
    rec.cum_clips = r.cum_clips;
    rec.epoch = plan->plan.epoch_at(r);
    rec.short_side_min = r.sample_ranges.short_side_min;
    rec.short_side_max = r.sample_ranges.short_side_max;
    rec.t_stride_min = r.sample_ranges.t_stride_min;
    rec.t_stride_max = r.sample_ranges.t_stride_max;
    *out = rec;
  });
}

mg_status mg_plan_write_jsonl(mg_plan plan, const char* path) {
  return guarded([&] {
    require(plan && path, "mg_plan_write_jsonl: null argument");
    multigrid::write_plan_jsonl(std::string(path), plan->plan);
  });
}

mg_status mg_plan_summary_json(mg_plan plan, mg_plan baseline, char** out_json) {
  return guarded([&] {
    require(plan && baseline && out_json, "mg_plan_summary_json: null argument");
    *out_json = dup_string(multigrid::summary_json(multigrid::summarize(plan->plan, baseline->plan)));
  });
}

mg_status mg_plan_summary_csv(const mg_plan* plans, const char* const* names, size_t count, mg_plan baseline,
                              char** out_csv) {
  return guarded([&] {
    require(plans && names && baseline && out_csv, "mg_plan_summary_csv: null argument");
    std::vector<std::pair<std::string, multigrid::PlanSummary>> rows;
    for (size_t i = 0; i < count; ++i) {
      require(plans[i] && names[i], "mg_plan_summary_csv: null plan or name");
      rows.emplace_back(names[i], multigrid::summarize(plans[i]->plan, baseline->plan));
    }
    *out_csv = dup_string(multigrid::summary_csv(rows));
  });
}

// ----------------------------------------------------------------------------
// Clips
//

mg_grid_spec mg_grid_identity(int frames, int height, int width) {
  const auto g = multigrid::GridSpec::identity(frames, height, width);
  return {g.t_span, g.t_stride, g.t_offset, g.s_span_h, g.s_span_w,
          g.s_stride_h, g.s_stride_w, g.s_offset_y, g.s_offset_x};
}

mg_status mg_clip_create(int frames, int height, int width, int channels, const float* data, mg_clip* out) {
  return guarded([&] {
    require(data && out, "mg_clip_create: null argument");
    if (frames < 1 || height < 1 || width < 1 || channels < 1) {
      multigrid::fail(multigrid::ErrorCode::kShape, "mg_clip_create: dimensions must be >= 1");
    }
    auto clip = multigrid::Clip::zeros(frames, height, width, channels);
    std::memcpy(clip.data.data(), data, clip.data.size() * sizeof(float));
    clip.validate();
    *out = new mg_clip_s{std::move(clip)};
  });
}

mg_status mg_clip_read(const char* path, mg_clip* out) {
  return guarded([&] {
    require(path && out, "mg_clip_read: null argument");
    *out = new mg_clip_s{multigrid::read_clipbin(path)};
  });
}

mg_status mg_clip_write(mg_clip clip, const char* path) {
  return guarded([&] {
    require(clip && path, "mg_clip_write: null argument");
    multigrid::write_clipbin(path, clip->clip);
  });
}

mg_status mg_clip_shape(mg_clip clip, int dims[4]) {
  return guarded([&] {
    require(clip && dims, "mg_clip_shape: null argument");
    dims[0] = clip->clip.frames;
    dims[1] = clip->clip.height;
    dims[2] = clip->clip.width;
    dims[3] = clip->clip.channels;
  });
}

const float* mg_clip_data(mg_clip clip) { return clip ? clip->clip.data.data() : nullptr; }

mg_status mg_clip_resample(mg_clip clip, const mg_grid_spec* grid, mg_clip* out) {
  return guarded([&] {
    require(clip && grid && out, "mg_clip_resample: null argument");
    multigrid::GridSpec g;
    g.t_span = grid->t_span;
    g.t_stride = grid->t_stride;
    g.t_offset = grid->t_offset;
    g.s_span_h = grid->s_span_h;
    g.s_span_w = grid->s_span_w;
    g.s_stride_h = grid->s_stride_h;
    g.s_stride_w = grid->s_stride_w;
    g.s_offset_y = grid->s_offset_y;
    g.s_offset_x = grid->s_offset_x;
    *out = new mg_clip_s{multigrid::resample(clip->clip, g)};
  });
}

void mg_clip_destroy(mg_clip clip) { delete clip; }

// ----------------------------------------------------------------------------
// Datasets
//

mg_status mg_dataset_generate(mg_config config, mg_split split, mg_dataset* out) {
  return guarded([&] {
    require(config && out, "mg_dataset_generate: null argument");
    const auto& spec = split == MG_SPLIT_TRAIN ? config->cfg.train_data : config->cfg.val_data;
    if (!spec) multigrid::fail(multigrid::ErrorCode::kConfig, "data: the config has no data section");
    *out = new mg_dataset_s{multigrid::generate(*spec)};
  });
}

mg_status mg_dataset_load(const char* dir, mg_dataset* out) {
  return guarded([&] {
    require(dir && out, "mg_dataset_load: null argument");
    *out = new mg_dataset_s{multigrid::load_dataset(dir)};
  });
}

mg_status mg_dataset_dump(mg_dataset dataset, const char* dir) {
  return guarded([&] {
    require(dataset && dir, "mg_dataset_dump: null argument");
    multigrid::dump_dataset(dataset->data, dir);
  });
}

mg_status mg_dataset_size(mg_dataset dataset, size_t* out) {
  return guarded([&] {
    require(dataset && out, "mg_dataset_size: null argument");
    *out = dataset->data.size();
  });
}

void mg_dataset_destroy(mg_dataset dataset) { delete dataset; }

// ----------------------------------------------------------------------------
// Training and evaluation
//

mg_status mg_train(mg_config config, mg_plan plan, mg_dataset dataset, const mg_train_options* options,
                   mg_model* out) {
  return guarded([&] {
    require(config && plan && dataset && out, "mg_train: null argument");
    const auto opt = train_options(config->cfg, options);
    auto result = multigrid::train(plan->plan, dataset->data, opt);
    multigrid::Checkpoint ckpt{opt.model, std::move(result.params), std::move(result.optimizer), opt.seed,
                               static_cast<std::uint64_t>(plan->plan.records.size())};
    *out = new mg_model_s{std::move(ckpt)};
  });
}

mg_status mg_model_init(mg_config config, uint64_t seed, mg_model* out) {
  return guarded([&] {
    require(config && out, "mg_model_init: null argument");
    const auto& cfg = config->cfg;
    auto params = multigrid::init_params<float>(cfg.model, seed);
    auto state = multigrid::SgdState<float>::zeros_like(params.tensors, cfg.momentum, cfg.weight_decay);
    *out = new mg_model_s{multigrid::Checkpoint{cfg.model, std::move(params), std::move(state), seed, 0}};
  });
}

mg_status mg_model_save(mg_model model, const char* path) {
  return guarded([&] {
    require(model && path, "mg_model_save: null argument");
    multigrid::save_checkpoint(path, model->ckpt);
  });
}

mg_status mg_model_load(const char* path, mg_model* out) {
  return guarded([&] {
    require(path && out, "mg_model_load: null argument");
    *out = new mg_model_s{multigrid::load_checkpoint(path)};
  });
}

void mg_model_destroy(mg_model model) { delete model; }

mg_status mg_evaluate(mg_config config, mg_model model, mg_dataset dataset, const mg_eval_options* options,
                      mg_eval_result* out) {
  return guarded([&] {
    require(config && model && dataset && out, "mg_evaluate: null argument");
    multigrid::EvalSettings s = config->cfg.eval;
    if (options) {
      if (options->clips > 0) s.clips = options->clips;
      s.threads = options->threads;
    }
    const auto r = multigrid::evaluate(model->ckpt.model, model->ckpt.params, dataset->data, s);
    *out = {r.top1, r.top_n, r.videos};
  });
}

}  // extern "C"
