/* Copyright 2026 The Multigrid Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface to the multigrid training library. All objects are opaque
 * handles created by the library and released with the matching *_destroy
 * function. Functions return MG_OK or an error status; the message for the
 * most recent failure on the calling thread is available from mg_last_error().
 */
#ifndef MULTIGRID_MULTIGRID_H_
#define MULTIGRID_MULTIGRID_H_

#include <stddef.h>
#include <stdint.h>

#if defined(MULTIGRID_BUILDING_LIBRARY)
#define MG_API __attribute__((visibility("default")))
#else
#define MG_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mg_status {
  MG_OK = 0,
  MG_ERR_INVALID_ARGUMENT = 1,
  MG_ERR_OUT_OF_BOUNDS = 2,
  MG_ERR_INVALID_GRID = 3,
  MG_ERR_CONFIG = 4,
  MG_ERR_SHAPE = 5,
  MG_ERR_IO = 6,
  MG_ERR_NUMERIC = 7,
  MG_ERR_INTERNAL = 100
} mg_status;

typedef struct mg_config_s* mg_config;
typedef struct mg_plan_s* mg_plan;
typedef struct mg_clip_s* mg_clip;
typedef struct mg_dataset_s* mg_dataset;
typedef struct mg_model_s* mg_model;

MG_API const char* mg_version(void);
MG_API const char* mg_status_string(mg_status status);
/* Message of the last failed call on this thread; "" if none. */
MG_API const char* mg_last_error(void);
/* Frees strings returned through char** out-parameters. */
MG_API void mg_string_free(char* s);

/* ---- experiment configuration (JSON) ---- */
MG_API mg_status mg_config_load(const char* path, mg_config* out);
MG_API mg_status mg_config_parse(const char* json_text, mg_config* out);
MG_API void mg_config_destroy(mg_config config);

/* ---- schedule compilation ---- */
typedef enum mg_phase { MG_PHASE_CYCLING = 0, MG_PHASE_FINETUNE = 1, MG_PHASE_BASELINE = 2 } mg_phase;

typedef struct mg_iteration_record {
  int64_t iter;
  int32_t phase; /* mg_phase */
  int32_t long_idx; /* -1 when the long cycle is inactive */
  int32_t short_m;  /* -1 when the short cycle is inactive */
  int32_t lr_stage;
  int64_t b, t, h, w;
  double lr;
  int64_t bn_group;
  int64_t cum_clips;
  double epoch;
  double short_side_min, short_side_max;
  double t_stride_min, t_stride_max;
} mg_iteration_record;

MG_API mg_status mg_plan_compile(mg_config config, mg_plan* out);
/* The config's recipe with both cycles disabled and epoch multiplier 1. */
MG_API mg_status mg_plan_compile_baseline(mg_config config, mg_plan* out);
MG_API void mg_plan_destroy(mg_plan plan);
MG_API mg_status mg_plan_size(mg_plan plan, size_t* out);
MG_API mg_status mg_plan_record(mg_plan plan, size_t index, mg_iteration_record* out);
MG_API mg_status mg_plan_write_jsonl(mg_plan plan, const char* path);
/* Summary JSON object of `plan` measured against `baseline`. */
MG_API mg_status mg_plan_summary_json(mg_plan plan, mg_plan baseline, char** out_json);
/* CSV rows (plan,metric,value) for `count` plans, each against `baseline`. */
MG_API mg_status mg_plan_summary_csv(const mg_plan* plans, const char* const* names, size_t count,
                                     mg_plan baseline, char** out_csv);

/* ---- clips and sampling grids ---- */
typedef struct mg_grid_spec {
  double t_span, t_stride, t_offset;
  double s_span_h, s_span_w;
  double s_stride_h, s_stride_w;
  double s_offset_y, s_offset_x;
} mg_grid_spec;

MG_API mg_grid_spec mg_grid_identity(int frames, int height, int width);
MG_API mg_status mg_clip_create(int frames, int height, int width, int channels, const float* data,
                                mg_clip* out);
MG_API mg_status mg_clip_read(const char* path, mg_clip* out);
MG_API mg_status mg_clip_write(mg_clip clip, const char* path);
/* dims: frames, height, width, channels */
MG_API mg_status mg_clip_shape(mg_clip clip, int dims[4]);
MG_API const float* mg_clip_data(mg_clip clip);
MG_API mg_status mg_clip_resample(mg_clip clip, const mg_grid_spec* grid, mg_clip* out);
MG_API void mg_clip_destroy(mg_clip clip);

/* ---- synthetic datasets ---- */
typedef enum mg_split { MG_SPLIT_TRAIN = 0, MG_SPLIT_VAL = 1 } mg_split;

MG_API mg_status mg_dataset_generate(mg_config config, mg_split split, mg_dataset* out);
MG_API mg_status mg_dataset_load(const char* dir, mg_dataset* out);
MG_API mg_status mg_dataset_dump(mg_dataset dataset, const char* dir);
MG_API mg_status mg_dataset_size(mg_dataset dataset, size_t* out);
MG_API void mg_dataset_destroy(mg_dataset dataset);

/* ---- training and evaluation ---- */
typedef struct mg_train_options {
  uint64_t seed;
  const char* metrics_path;   /* NULL: no metrics log */
  const char* checkpoint_dir; /* NULL: no stage checkpoints */
  int record_timing;          /* nonzero: fill wall_ms in the metrics log */
  int threads;                /* <= 1: no batch prefetch */
} mg_train_options;

typedef struct mg_eval_options {
  int clips;   /* <= 0: use the config value */
  int threads; /* <= 1: single-threaded */
} mg_eval_options;

typedef struct mg_eval_result {
  double top1;
  double top_n;
  int64_t videos;
} mg_eval_result;

MG_API mg_status mg_train(mg_config config, mg_plan plan, mg_dataset dataset, const mg_train_options* options,
                          mg_model* out);
MG_API mg_status mg_model_init(mg_config config, uint64_t seed, mg_model* out);
MG_API mg_status mg_model_save(mg_model model, const char* path);
MG_API mg_status mg_model_load(const char* path, mg_model* out);
MG_API void mg_model_destroy(mg_model model);
MG_API mg_status mg_evaluate(mg_config config, mg_model model, mg_dataset dataset, const mg_eval_options* options,
                             mg_eval_result* out);

#ifdef __cplusplus
}
#endif

#endif /* MULTIGRID_MULTIGRID_H_ */
