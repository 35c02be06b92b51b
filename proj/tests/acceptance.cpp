// Acceptance run: one PASS/FAIL line per criterion. Exit status is the number
// of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "gradcheck.hpp"
#include "multigrid/accounting.hpp"
#include "multigrid/config.hpp"
#include "multigrid/plan_io.hpp"
#include "multigrid/rng.hpp"
#include "multigrid/sampling_grid.hpp"
#include "multigrid/schedule.hpp"
#include "multigrid/synth_data.hpp"
#include "multigrid/trainer.hpp"
#include "plan_checks.hpp"

using namespace multigrid;

namespace {

// Tolerances.
constexpr double kIterRatioLo = 3.3;
constexpr double kIterRatioHi = 3.5;
constexpr double kBaselineEpochs = 238.9;
constexpr double kEpochTol = 0.1;
constexpr double kFlopsDeviation = 0.10;
constexpr double kGradRelError = 1e-4;
constexpr double kBilinearTol = 1e-6;
constexpr double kToyTop1Tol = 0.03;
constexpr double kToyFlopsFraction = 0.25;
constexpr int kToySeeds = 3;

int failures = 0;

using Clock = std::chrono::steady_clock;

void report(int id, const char* name, bool pass, const std::string& detail, Clock::time_point start) {
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  std::printf("%s  %d. %s: %s (%.1f s)\n", pass ? "PASS" : "FAIL", id, name, detail.c_str(), secs);
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string config_path(const char* name) { return std::string(MULTIGRID_SOURCE_DIR) + "/configs/" + name + ".json"; }

std::string plan_text(const CompiledPlan& plan) {
  std::ostringstream os;
  write_plan_jsonl(os, plan);
  return os.str();
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void criterion_iteration_ratio() {
  const auto start = Clock::now();
  const ExperimentConfig mg = load_experiment_config(config_path("kinetics_multigrid"));
  const ExperimentConfig base = load_experiment_config(config_path("kinetics_baseline"));
  const PlanSummary s = summarize(compile(mg.schedule), compile(base.schedule));
  std::ostringstream d;
  d << "iteration_ratio=" << s.iteration_ratio_vs_baseline << " (" << s.total_iters << " vs " << s.baseline_iters
    << "), want [" << kIterRatioLo << ", " << kIterRatioHi << "]";
  const bool ok = s.baseline_iters == 112000 && s.iteration_ratio_vs_baseline >= kIterRatioLo &&
                  s.iteration_ratio_vs_baseline <= kIterRatioHi;
  report(1, "iteration ratio", ok, d.str(), start);
}

void criterion_epochs() {
  const auto start = Clock::now();
  const ExperimentConfig base = load_experiment_config(config_path("kinetics_baseline"));
  const CompiledPlan plan = compile(base.schedule);
  const PlanSummary s = summarize(plan, plan);
  std::ostringstream d;
  d << "epochs=" << s.epochs << ", want " << kBaselineEpochs << " +- " << kEpochTol;
  report(2, "baseline epochs", std::abs(s.epochs - kBaselineEpochs) <= kEpochTol, d.str(), start);
}

// Default plans: both cycles on, at the shipped configs and the shared fixtures.
std::vector<std::pair<std::string, ScheduleConfig>> default_plans() {
  std::vector<std::pair<std::string, ScheduleConfig>> v;
  for (const char* name : {"kinetics_multigrid", "kinetics_short_only", "kinetics_baseline", "toy_multigrid",
                           "toy_baseline"}) {
    v.emplace_back(name, load_experiment_config(config_path(name)).schedule);
  }
  for (double e : {1.0, 2.0}) {
    v.emplace_back("kinetics x" + std::to_string(static_cast<int>(e)), fixtures::kinetics(true, true, e));
    v.emplace_back("toy long-only x" + std::to_string(static_cast<int>(e)), fixtures::toy(true, false, e));
  }
  return v;
}

void criterion_flops_constancy() {
  const auto start = Clock::now();
  double worst = 0;
  std::string worst_name;
  std::int64_t records = 0;
  for (const auto& [name, cfg] : default_plans()) {
    const CompiledPlan plan = compile(cfg);
    records += static_cast<std::int64_t>(plan.records.size());
    const double dev = plan_checks::max_flops_deviation(plan);
    if (dev >= worst) {
      worst = dev;
      worst_name = name;
    }
  }
  std::ostringstream d;
  d << records << " records, max deviation " << worst << " (" << worst_name << "), want <= " << kFlopsDeviation;
  report(3, "FLOPs constancy", worst <= kFlopsDeviation, d.str(), start);
}

void criterion_structure() {
  const auto start = Clock::now();
  std::ostringstream d;
  bool ok = true;
  int checked = 0;
  for (const auto& [name, cfg] : default_plans()) {
    const CompiledPlan plan = compile(cfg);
    const plan_checks::Report rep = plan_checks::check_structure(cfg, plan);
    ++checked;
    if (!rep.ok()) {
      ok = false;
      d << name << ": " << rep.problems.front() << "; ";
    }
  }
  // BN groups in the Kinetics plan span exactly {8, 16, 32}.
  const CompiledPlan k = compile(fixtures::kinetics(true, true, 1.5));
  std::vector<std::int64_t> groups;
  for (const auto& r : k.records) groups.push_back(r.bn_group);
  std::sort(groups.begin(), groups.end());
  groups.erase(std::unique(groups.begin(), groups.end()), groups.end());
  if (groups != std::vector<std::int64_t>{8, 16, 32}) {
    ok = false;
    d << "kinetics BN groups not {8,16,32}; ";
  }
  d << checked << " plans checked";
  report(4, "schedule structure", ok, d.str(), start);
}

void criterion_baseline_identity() {
  const auto start = Clock::now();
  std::ostringstream d;
  bool ok = true;

  // Record for record against the recipe written out directly.
  for (const char* name : {"kinetics_baseline", "toy_baseline"}) {
    const ScheduleConfig cfg = load_experiment_config(config_path(name)).schedule;
    const CompiledPlan plan = compile(cfg);
    std::int64_t total = 0;
    for (const auto& s : cfg.lr.stages) total += s.length;
    bool same = static_cast<std::int64_t>(plan.records.size()) == total;
    std::int64_t i = 0, mismatches = 0;
    for (std::size_t k = 0; same && k < cfg.lr.stages.size(); ++k) {
      for (std::int64_t j = 0; j < cfg.lr.stages[k].length; ++j, ++i) {
        double lr = cfg.lr.stages[k].lr;
        if (i < cfg.lr.warmup_iters) {
          lr = cfg.lr.warmup_start_lr +
               (lr - cfg.lr.warmup_start_lr) * static_cast<double>(i) / static_cast<double>(cfg.lr.warmup_iters);
        }
        const auto& r = plan.records[static_cast<std::size_t>(i)];
        if (!(r.shape == cfg.base_shape) || !plan_checks::close(r.lr, lr, 1e-12) ||
            r.bn_group != cfg.cycles.bn_base_group || r.phase != Phase::kBaseline) {
          ++mismatches;
        }
      }
    }
    if (!same || mismatches) {
      ok = false;
      d << name << ": " << mismatches << " mismatched records; ";
    }
  }

  // Trainer against a hand-rolled constant-shape loop, one seed.
  SynthSpec spec;
  spec.num_videos = 64;
  spec.seed = 1;
  const Dataset ds = generate(spec);
  ScheduleConfig cfg = fixtures::toy(false, false, 1.0);
  cfg.base_shape = {4, 8, 32, 32};
  cfg.dataset_size = 64;
  cfg.lr.stages = {{24, 0.1}, {16, 0.01}, {8, 0.001}, {8, 0.0001}};
  cfg.lr.warmup_iters = 8;
  cfg.cycles.bn_base_group = 2;
  TrainOptions opt;
  opt.model.channels = {4, 8, 8};
  opt.seed = 5;
  const TrainResult res = train(compile(cfg), ds, opt);

  auto params = init_params<float>(opt.model, opt.seed);
  auto state = SgdState<float>::zeros_like(params.tensors, 0.9, 1e-4);
  const double lrs[] = {0.1, 0.01, 0.001, 0.0001};
  const int ends[] = {24, 40, 48, 56};
  int diverged_at = -1;
  for (int i = 0; i < 56; ++i) {
    int k = 0;
    while (i >= ends[k]) ++k;
    double lr = lrs[k];
    if (i < 8) lr = 0.01 + (lr - 0.01) * i / 8.0;
    IterationRecord r;
    r.iter = i;
    r.shape = cfg.base_shape;
    r.sample_ranges = {36, 48, 2, 2};
    const Batch b = next_batch(ds, r, opt.seed);
    auto lg = forward_backward(opt.model, params, b.data, b.labels, 2);
    if (diverged_at < 0 && (static_cast<std::size_t>(i) >= res.losses.size() ||
                            std::memcmp(&lg.loss, &res.losses[static_cast<std::size_t>(i)], sizeof(float)) != 0)) {
      diverged_at = i;
    }
    sgd_step(params.tensors, lg.grads, state, lr);
  }
  bool params_equal = res.params.tensors.size() == params.tensors.size();
  for (std::size_t k = 0; params_equal && k < params.tensors.size(); ++k) {
    params_equal = res.params.tensors[k].data == params.tensors[k].data;
  }
  if (diverged_at >= 0 || !params_equal || res.losses.size() != 56) {
    ok = false;
    d << "trainer loss differs from reference at iter " << diverged_at << "; ";
  }
  d << "2 recipes record for record, 56 trainer steps bit-exact";
  report(5, "baseline identity", ok, d.str(), start);
}

void criterion_gradients() {
  const auto start = Clock::now();
  double worst = 0;
  std::size_t checked = 0;
  std::ostringstream d;
  for (const auto& r : gradcheck::all()) {
    worst = std::max(worst, r.max_rel_error);
    checked += r.checked;
    d << r.name << "=" << r.max_rel_error << " ";
  }
  d << "(" << checked << " entries), want < " << kGradRelError;
  report(6, "gradient oracle", worst < kGradRelError && checked > 0, d.str(), start);
}

Clip random_clip(int t, int h, int w, int c, std::uint64_t seed) {
  Clip clip = Clip::zeros(t, h, w, c);
  Rng rng = make_rng(seed, {});
  std::uniform_real_distribution<float> u(-2.0f, 2.0f);
  for (auto& v : clip.data) v = u(rng);
  return clip;
}

void criterion_resampler() {
  const auto start = Clock::now();
  std::ostringstream d;
  bool ok = true;

  // Identity grid, byte for byte, including signed zeros.
  Clip clip = random_clip(6, 10, 12, 3, 1);
  clip.data[0] = -0.0f;
  GridSpec id;
  id.t_span = 6;
  id.s_span_h = 10;
  id.s_span_w = 12;
  const Clip same = resample(clip, id);
  if (same.data.size() != clip.data.size() ||
      std::memcmp(same.data.data(), clip.data.data(), clip.data.size() * sizeof(float)) != 0) {
    ok = false;
    d << "identity grid changed bytes; ";
  }

  // Convex hull over random training grids.
  const auto [lo, hi] = std::minmax_element(clip.data.begin(), clip.data.end());
  Rng rng = make_rng(2, {});
  std::int64_t outside = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const GridSpec g = draw_training_grid({6, 10, 12}, {3, 5, 7}, GridSampleRanges{6, 14, 1, 2}, rng);
    for (float v : resample(clip, g).data) outside += (v < *lo || v > *hi);
  }
  if (outside) {
    ok = false;
    d << outside << " samples outside the hull; ";
  }

  // Hand-computed bilinear values on a 2x3 frame [[1 2 3] [4 5 6]].
  Clip small = Clip::zeros(1, 2, 3, 1);
  small.data = {1, 2, 3, 4, 5, 6};
  struct Case {
    double y, x, want;
  };
  const Case cases[] = {{0.5, 0.5, 3.0}, {0.0, 0.25, 1.25}, {0.25, 0.0, 1.75}, {0.5, 1.5, 4.0}, {1.0, 2.0, 6.0}};
  for (const auto& c : cases) {
    GridSpec g;
    g.t_span = 1;
    g.s_span_h = g.s_span_w = 1;
    g.s_offset_y = c.y;
    g.s_offset_x = c.x;
    const Clip out = resample(small, g);
    if (out.data.size() != 1 || std::abs(out.data[0] - c.want) > kBilinearTol) {
      ok = false;
      d << "bilinear at (" << c.y << "," << c.x << ") gave " << (out.data.empty() ? NAN : out.data[0]) << " want "
        << c.want << "; ";
    }
  }
  d << "identity, 200 hull grids, 5 hand cases";
  report(7, "resampler oracles", ok, d.str(), start);
}

struct ToyRun {
  EvalResult eval;
  double seconds = 0;
};

ToyRun run_toy(const ExperimentConfig& cfg, const Dataset& train_set, const Dataset& val_set, std::uint64_t seed) {
  const auto t0 = Clock::now();
  TrainOptions opt;
  opt.model = cfg.model;
  opt.seed = seed;
  opt.momentum = cfg.momentum;
  opt.weight_decay = cfg.weight_decay;
  opt.span_policy = cfg.schedule.sampling.span_policy;
  opt.threads = 2;
  const TrainResult res = train(compile(cfg.schedule), train_set, opt);
  EvalSettings es = cfg.eval;
  es.threads = 2;
  ToyRun r;
  r.eval = evaluate(cfg.model, res.params, val_set, es);
  r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return r;
}

void criterion_toy_comparison() {
  const auto start = Clock::now();
  const ExperimentConfig base = load_experiment_config(config_path("toy_baseline"));
  const ExperimentConfig mg = load_experiment_config(config_path("toy_multigrid"));
  const Dataset train_set = generate(*base.train_data);
  const Dataset val_set = generate(*base.val_data);
  const PlanSummary s = summarize(compile(mg.schedule), compile(base.schedule));

  double base_top1 = 0, mg_top1 = 0;
  for (int k = 0; k < kToySeeds; ++k) {
    const std::uint64_t seed = 1 + static_cast<std::uint64_t>(k);
    const ToyRun b = run_toy(base, train_set, val_set, seed);
    const ToyRun m = run_toy(mg, train_set, val_set, seed);
    std::printf("      seed %llu: baseline top1=%.4f (%.0f s), multigrid top1=%.4f (%.0f s)\n",
                static_cast<unsigned long long>(seed), b.eval.top1, b.seconds, m.eval.top1, m.seconds);
    std::fflush(stdout);
    base_top1 += b.eval.top1 / kToySeeds;
    mg_top1 += m.eval.top1 / kToySeeds;
  }
  std::ostringstream d;
  d << "mean top1 baseline=" << base_top1 << " multigrid=" << mg_top1 << " (|diff| <= " << kToyTop1Tol
    << "), flops fraction=" << s.flops_proxy_fraction << " (<= " << kToyFlopsFraction << "), iterations "
    << s.total_iters << " vs " << s.baseline_iters;
  const bool ok = std::abs(mg_top1 - base_top1) <= kToyTop1Tol && s.flops_proxy_fraction <= kToyFlopsFraction;
  report(8, "toy end-to-end", ok, d.str(), start);
}

void criterion_determinism() {
  const auto start = Clock::now();
  std::ostringstream d;
  bool ok = true;
  auto expect = [&](bool same, const char* what) {
    if (!same) {
      ok = false;
      d << what << " differs; ";
    }
  };

  for (const char* name : {"kinetics_multigrid", "toy_multigrid"}) {
    const ScheduleConfig cfg = load_experiment_config(config_path(name)).schedule;
    expect(plan_text(compile(cfg)) == plan_text(compile(cfg)), "plan JSONL");
  }

  SynthSpec spec;
  spec.num_videos = 24;
  spec.seed = 9;
  const Dataset a = generate(spec), b = generate(spec);
  bool data_same = a.labels == b.labels;
  for (std::size_t i = 0; data_same && i < a.clips.size(); ++i) data_same = a.clips[i].data == b.clips[i].data;
  expect(data_same, "synthetic dataset");

  ScheduleConfig cfg = fixtures::toy(true, true, 2.0);
  cfg.base_shape = {4, 8, 32, 32};
  cfg.dataset_size = 24;
  cfg.lr.stages = {{48, 0.1}, {32, 0.01}, {24, 0.001}, {24, 0.0001}};
  cfg.lr.warmup_iters = 4;
  cfg.cycles.bn_base_group = 2;
  const CompiledPlan plan = compile(cfg);
  const auto dir = std::filesystem::temp_directory_path() / "multigrid_acceptance";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  std::vector<TrainResult> runs;
  for (int k = 0; k < 2; ++k) {
    TrainOptions opt;
    opt.model.channels = {2, 4, 4};
    opt.seed = 11;
    opt.threads = 1 + k;
    opt.metrics_path = (dir / ("m" + std::to_string(k) + ".jsonl")).string();
    runs.push_back(train(plan, a, opt));
  }
  expect(slurp(dir / "m0.jsonl") == slurp(dir / "m1.jsonl") && !slurp(dir / "m0.jsonl").empty(), "metrics log");
  bool params_same = true;
  for (std::size_t k = 0; k < runs[0].params.tensors.size(); ++k) {
    params_same = params_same && runs[0].params.tensors[k].data == runs[1].params.tensors[k].data;
  }
  expect(params_same, "trained parameters");

  ModelConfig model;
  model.channels = {2, 4, 4};
  EvalSettings es;
  es.clips = 3;
  const EvalResult e1 = evaluate(model, runs[0].params, b, es);
  es.threads = 3;
  const EvalResult e2 = evaluate(model, runs[0].params, b, es);
  expect(e1.top1 == e2.top1 && e1.top_n == e2.top_n, "evaluation");
  std::filesystem::remove_all(dir);

  d << "plans, data, metrics, parameters, evaluation";
  report(9, "determinism", ok, d.str(), start);
}

}  // namespace

int main() {
  const std::vector<std::function<void()>> criteria = {
      criterion_iteration_ratio, criterion_epochs,    criterion_flops_constancy,
      criterion_structure,       criterion_baseline_identity, criterion_gradients,
      criterion_resampler,       criterion_determinism,       criterion_toy_comparison};
  for (const auto& c : criteria) {
    try {
      c();
    } catch (const std::exception& e) {
      std::printf("FAIL  criterion raised: %s\n", e.what());
      ++failures;
    }
  }
  std::printf("%d criteria failed\n", failures);
  return failures;
}
