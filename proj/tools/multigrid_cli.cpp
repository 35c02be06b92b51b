// Copyright 2026 The Multigrid Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end over the C API: plan, train, eval, resample, synth.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "multigrid/multigrid.h"

namespace {

struct Failure {
  mg_status status;
};

void check(mg_status s, const char* what) {
  if (s != MG_OK) {
    std::cerr << "error: " << what << ": " << mg_last_error() << " [" << mg_status_string(s) << "]\n";
    throw Failure{s};
  }
}

template <typename H, void (*Destroy)(H)>
struct Handle {
  H h = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() {
    if (h) Destroy(h);
  }
  H* out() { return &h; }
  operator H() const { return h; }
};

using Config = Handle<mg_config, mg_config_destroy>;
using Plan = Handle<mg_plan, mg_plan_destroy>;
using Clip = Handle<mg_clip, mg_clip_destroy>;
using Dataset = Handle<mg_dataset, mg_dataset_destroy>;
using Model = Handle<mg_model, mg_model_destroy>;

struct OwnedString {
  char* s = nullptr;
  ~OwnedString() { mg_string_free(s); }
};

int default_threads() {
  if (const char* env = std::getenv("MULTIGRID_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 1;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    std::cerr << "error: cannot open " << path << " for writing\n";
    throw Failure{MG_ERR_IO};
  }
  out << text;
}

void load_data(mg_config cfg, const std::string& dir, mg_split split, Dataset& data) {
  if (dir.empty()) {
    check(mg_dataset_generate(cfg, split, data.out()), "generating dataset");
  } else {
    check(mg_dataset_load(dir.c_str(), data.out()), "loading dataset");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multigrid training schedules for video models"};
  app.require_subcommand(1);

  // plan
  std::string plan_config, plan_out, plan_baseline, plan_summary_out, plan_csv;
  bool plan_summary = false;
  auto* plan = app.add_subcommand("plan", "Compile a training plan to JSON Lines");
  plan->add_option("--config", plan_config, "Experiment config (JSON)")->required();
  plan->add_option("--out", plan_out, "Plan JSONL output path");
  plan->add_flag("--summary", plan_summary, "Print the summary JSON object to stdout");
  plan->add_option("--summary-out", plan_summary_out, "Write the summary JSON object to a file");
  plan->add_option("--baseline", plan_baseline,
                   "Baseline config; defaults to the config's own recipe with cycles disabled");
  plan->add_option("--csv", plan_csv, "Write plan,metric,value rows to a CSV file");

  // train
  std::string train_config, train_out, train_metrics, train_ckpt_dir, train_data;
  std::uint64_t train_seed = 0;
  int train_threads = default_threads();
  bool train_timing = false;
  auto* train = app.add_subcommand("train", "Train the reference model on a compiled plan");
  train->add_option("--config", train_config, "Experiment config (JSON)")->required();
  train->add_option("--seed", train_seed, "Seed for initialization and batch sampling");
  train->add_option("--out", train_out, "Final checkpoint path")->required();
  train->add_option("--metrics", train_metrics, "Metrics JSONL path");
  train->add_option("--checkpoint-dir", train_ckpt_dir, "Directory for per-stage checkpoints");
  train->add_option("--data", train_data, "Load a dumped dataset instead of generating one");
  train->add_option("--threads", train_threads, "Thread budget (env MULTIGRID_THREADS)");
  train->add_flag("--timing", train_timing, "Record wall_ms in the metrics log");

  // eval
  std::string eval_config, eval_ckpt, eval_data;
  int eval_clips = 0;
  int eval_threads = default_threads();
  std::uint64_t eval_seed = 0;
  auto* eval = app.add_subcommand("eval", "Multi-clip evaluation of a checkpoint");
  eval->add_option("--config", eval_config, "Experiment config (JSON)")->required();
  eval->add_option("--checkpoint", eval_ckpt, "Checkpoint path")->required();
  eval->add_option("--clips", eval_clips, "Clips per video (default from config)");
  eval->add_option("--data", eval_data, "Load a dumped dataset instead of generating the validation split");
  eval->add_option("--threads", eval_threads, "Thread budget (env MULTIGRID_THREADS)");
  eval->add_option("--seed", eval_seed, "Accepted for uniformity; evaluation is deterministic");

  // resample
  std::string rs_in, rs_out;
  double t_span = -1, t_stride = 1, t_offset = 0;
  double span_h = -1, span_w = -1, stride_h = 1, stride_w = 1, offset_y = 0, offset_x = 0;
  auto* resample = app.add_subcommand("resample", "Resample a CLIPBIN clip on a sampling grid");
  resample->add_option("--in", rs_in, "Input CLIPBIN")->required();
  resample->add_option("--out", rs_out, "Output CLIPBIN")->required();
  resample->add_option("--t-span", t_span, "Temporal span in frames (default: all)");
  resample->add_option("--t-stride", t_stride, "Temporal stride");
  resample->add_option("--t-offset", t_offset, "Start frame");
  resample->add_option("--span-h", span_h, "Spatial span along rows (default: full height)");
  resample->add_option("--span-w", span_w, "Spatial span along columns (default: full width)");
  resample->add_option("--stride-h", stride_h, "Row stride");
  resample->add_option("--stride-w", stride_w, "Column stride");
  resample->add_option("--offset-y", offset_y, "Row offset");
  resample->add_option("--offset-x", offset_x, "Column offset");

  // synth
  std::string synth_config, synth_out, synth_split = "train";
  auto* synth = app.add_subcommand("synth", "Dump the synthetic dataset as CLIPBIN files plus index.json");
  synth->add_option("--config", synth_config, "Experiment config (JSON)")->required();
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--split", synth_split, "train or val")->check(CLI::IsMember({"train", "val"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*plan) {
      Config cfg;
      check(mg_config_load(plan_config.c_str(), cfg.out()), "loading config");
      Plan p, base;
      check(mg_plan_compile(cfg, p.out()), "compiling plan");
      if (plan_baseline.empty()) {
        check(mg_plan_compile_baseline(cfg, base.out()), "compiling baseline");
      } else {
        Config bcfg;
        check(mg_config_load(plan_baseline.c_str(), bcfg.out()), "loading baseline config");
        check(mg_plan_compile(bcfg, base.out()), "compiling baseline");
      }
      if (!plan_out.empty()) check(mg_plan_write_jsonl(p, plan_out.c_str()), "writing plan");
      if (plan_summary || !plan_summary_out.empty()) {
        OwnedString json;
        check(mg_plan_summary_json(p, base, &json.s), "summarizing plan");
        if (plan_summary) std::cout << json.s << "\n";
        if (!plan_summary_out.empty()) write_text(plan_summary_out, std::string(json.s) + "\n");
      }
      if (!plan_csv.empty()) {
        OwnedString csv;
        const mg_plan plans[] = {p, base};
        const char* names[] = {"plan", "baseline"};
        check(mg_plan_summary_csv(plans, names, 2, base, &csv.s), "writing csv");
        write_text(plan_csv, csv.s);
      }
    } else if (*train) {
      Config cfg;
      check(mg_config_load(train_config.c_str(), cfg.out()), "loading config");
      Plan p;
      check(mg_plan_compile(cfg, p.out()), "compiling plan");
      Dataset data;
      load_data(cfg, train_data, MG_SPLIT_TRAIN, data);
      mg_train_options opt{};
      opt.seed = train_seed;
      opt.metrics_path = train_metrics.empty() ? nullptr : train_metrics.c_str();
      opt.checkpoint_dir = train_ckpt_dir.empty() ? nullptr : train_ckpt_dir.c_str();
      opt.record_timing = train_timing ? 1 : 0;
      opt.threads = train_threads;
      Model model;
      check(mg_train(cfg, p, data, &opt, model.out()), "training");
      check(mg_model_save(model, train_out.c_str()), "saving checkpoint");
      size_t iters = 0;
      check(mg_plan_size(p, &iters), "reading plan");
      std::cout << "{\"iters\": " << iters << ", \"checkpoint\": \"" << train_out << "\"}\n";
    } else if (*eval) {
      Config cfg;
      check(mg_config_load(eval_config.c_str(), cfg.out()), "loading config");
      Model model;
      check(mg_model_load(eval_ckpt.c_str(), model.out()), "loading checkpoint");
      Dataset data;
      load_data(cfg, eval_data, MG_SPLIT_VAL, data);
      mg_eval_options opt{eval_clips, eval_threads};
      mg_eval_result r{};
      check(mg_evaluate(cfg, model, data, &opt, &r), "evaluating");
      std::ostringstream os;
      os.precision(17);
      os << "{\"top1\": " << r.top1 << ", \"top_n\": " << r.top_n << ", \"videos\": " << r.videos << "}";
      std::cout << os.str() << "\n";
    } else if (*resample) {
      Clip in, out;
      check(mg_clip_read(rs_in.c_str(), in.out()), "reading clip");
      int dims[4];
      check(mg_clip_shape(in, dims), "reading clip shape");
      mg_grid_spec g = mg_grid_identity(dims[0], dims[1], dims[2]);
      if (t_span > 0) g.t_span = t_span;
      if (span_h > 0) g.s_span_h = span_h;
      if (span_w > 0) g.s_span_w = span_w;
      g.t_stride = t_stride;
      g.t_offset = t_offset;
      g.s_stride_h = stride_h;
      g.s_stride_w = stride_w;
      g.s_offset_y = offset_y;
      g.s_offset_x = offset_x;
      check(mg_clip_resample(in, &g, out.out()), "resampling");
      check(mg_clip_write(out, rs_out.c_str()), "writing clip");
    } else if (*synth) {
      Config cfg;
      check(mg_config_load(synth_config.c_str(), cfg.out()), "loading config");
      Dataset data;
      check(mg_dataset_generate(cfg, synth_split == "val" ? MG_SPLIT_VAL : MG_SPLIT_TRAIN, data.out()),
            "generating dataset");
      check(mg_dataset_dump(data, synth_out.c_str()), "writing dataset");
    }
  } catch (const Failure& f) {
    return static_cast<int>(f.status);
  }
  return 0;
}
