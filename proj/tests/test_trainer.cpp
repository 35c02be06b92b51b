#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "multigrid/checkpoint.hpp"
#include "multigrid/error.hpp"
#include "multigrid/trainer.hpp"

using namespace multigrid;

namespace {

Dataset small_dataset(std::int64_t n = 64, std::uint64_t seed = 1) {
  SynthSpec s;
  s.num_videos = n;
  s.seed = seed;
  return generate(s);
}

ScheduleConfig short_recipe(bool cycles) {
  ScheduleConfig c = fixtures::toy(cycles, cycles, 1.0);
  c.base_shape = {4, 8, 32, 32};
  c.dataset_size = 64;
  c.lr.stages = {{12, 0.1}, {8, 0.01}, {4, 0.001}, {4, 0.0001}};
  c.lr.warmup_iters = 4;
  if (cycles) {
    // Long enough that every cycling stage still holds the four long-cycle shapes.
    c.lr.stages = {{48, 0.1}, {32, 0.01}, {24, 0.001}, {24, 0.0001}};
    c.cycles.epoch_multiplier = 2.0;
  }
  c.cycles.bn_base_group = 2;
  return c;
}

TrainOptions small_options(std::uint64_t seed) {
  TrainOptions o;
  o.model.channels = {4, 8, 8};
  o.seed = seed;
  return o;
}

std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("zero learning rate leaves parameters untouched") {
  const Dataset ds = small_dataset();
  CompiledPlan plan = compile(short_recipe(true));
  for (auto& r : plan.records) r.lr = 0;
  const auto opt = small_options(3);
  const TrainResult res = train(plan, ds, opt);
  const auto init = init_params<float>(opt.model, 3);
  REQUIRE(res.params.tensors.size() == init.tensors.size());
  for (std::size_t k = 0; k < init.tensors.size(); ++k) CHECK(res.params.tensors[k].data == init.tensors[k].data);
}

TEST_CASE("baseline plan matches a hand-rolled constant-shape loop") {
  const Dataset ds = small_dataset();
  const ScheduleConfig cfg = short_recipe(false);
  const CompiledPlan plan = compile(cfg);
  const auto opt = small_options(5);
  const TrainResult res = train(plan, ds, opt);

  // Reference loop: fixed shape, stepwise LR with linear warmup written out directly.
  auto params = init_params<float>(opt.model, 5);
  auto state = SgdState<float>::zeros_like(params.tensors, 0.9, 1e-4);
  const double lrs[] = {0.1, 0.01, 0.001, 0.0001};
  const int ends[] = {12, 20, 24, 28};
  std::vector<float> losses;
  for (int i = 0; i < 28; ++i) {
    int k = 0;
    while (i >= ends[k]) ++k;
    double lr = lrs[k];
    if (i < 4) lr = 0.01 + (lr - 0.01) * i / 4.0;
    IterationRecord r;
    r.iter = i;
    r.shape = {4, 8, 32, 32};
    r.sample_ranges = {36, 48, 2, 2};
    const Batch b = next_batch(ds, r, 5);
    auto lg = forward_backward(opt.model, params, b.data, b.labels, 2);
    losses.push_back(lg.loss);
    sgd_step(params.tensors, lg.grads, state, lr);
  }
  REQUIRE(res.losses.size() == losses.size());
  for (std::size_t i = 0; i < losses.size(); ++i) {
    INFO("iter " << i);
    CHECK(std::memcmp(&res.losses[i], &losses[i], sizeof(float)) == 0);
  }
  for (std::size_t k = 0; k < params.tensors.size(); ++k) CHECK(res.params.tensors[k].data == params.tensors[k].data);
}

TEST_CASE("applied LR and BN group follow the plan exactly") {
  const Dataset ds = small_dataset();
  const CompiledPlan plan = compile(short_recipe(true));
  const TrainResult res = train(plan, ds, small_options(1));
  REQUIRE(res.applied_lr.size() == plan.records.size());
  for (std::size_t i = 0; i < plan.records.size(); ++i) {
    CHECK(res.applied_lr[i] == plan.records[i].lr);
    CHECK(res.applied_bn_group[i] == plan.records[i].bn_group);
  }
}

TEST_CASE("default toy multigrid plan runs to completion") {
  SynthSpec spec;
  spec.num_videos = 200;
  const Dataset ds = generate(spec);
  ScheduleConfig cfg = fixtures::toy(true, true, 1.0);
  cfg.dataset_size = 2000;
  const CompiledPlan plan = compile(cfg);
  TrainOptions opt;
  opt.model.channels = {2, 2, 2};
  opt.threads = 2;
  const TrainResult res = train(plan, ds, opt);
  CHECK(res.losses.size() == plan.records.size());
  for (float l : res.losses) REQUIRE(std::isfinite(l));
}

TEST_CASE("prefetching does not change results") {
  const Dataset ds = small_dataset();
  const CompiledPlan plan = compile(short_recipe(true));
  auto a = small_options(9);
  auto b = small_options(9);
  b.threads = 3;
  CHECK(train(plan, ds, a).losses == train(plan, ds, b).losses);
}

TEST_CASE("metrics log is deterministic and complete") {
  const Dataset ds = small_dataset();
  const CompiledPlan plan = compile(short_recipe(true));
  const auto dir = temp_dir("multigrid_test_metrics");
  auto opt = small_options(2);
  opt.metrics_path = (dir / "a.jsonl").string();
  train(plan, ds, opt);
  opt.metrics_path = (dir / "b.jsonl").string();
  train(plan, ds, opt);
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  const std::string a = slurp(dir / "a.jsonl");
  CHECK(a == slurp(dir / "b.jsonl"));
  CHECK(std::count(a.begin(), a.end(), '\n') == static_cast<long>(plan.records.size()));
  CHECK(a.rfind("{\"iter\":0,\"loss\":", 0) == 0);
  CHECK(a.find("\"wall_ms\":null") != std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST_CASE("stage checkpoints resume bit-exactly") {
  const Dataset ds = small_dataset();
  const CompiledPlan plan = compile(short_recipe(true));
  const auto dir = temp_dir("multigrid_test_ckpt");
  auto opt = small_options(4);
  opt.checkpoint_dir = dir.string();
  const TrainResult full = train(plan, ds, opt);
  for (int k = 0; k < 4; ++k) CHECK(std::filesystem::exists(dir / ("stage" + std::to_string(k) + ".ckpt")));

  const Checkpoint ck = load_checkpoint((dir / "stage1.ckpt").string());
  CHECK(ck.seed == 4);
  REQUIRE(ck.next_iter > 0);
  REQUIRE(ck.next_iter < plan.records.size());
  CompiledPlan rest = plan;
  rest.records.erase(rest.records.begin(), rest.records.begin() + static_cast<std::ptrdiff_t>(ck.next_iter));
  auto resume_opt = small_options(4);
  const TrainResult resumed = train_from(rest, ds, resume_opt, ck.params, ck.optimizer);
  for (std::size_t k = 0; k < full.params.tensors.size(); ++k) {
    CHECK(resumed.params.tensors[k].data == full.params.tensors[k].data);
  }
  for (std::size_t k = 0; k < full.params.buffers.size(); ++k) {
    CHECK(resumed.params.buffers[k].data == full.params.buffers[k].data);
  }

  // Round trip of the final state.
  Checkpoint last{opt.model, full.params, full.optimizer, 4, plan.records.size()};
  save_checkpoint((dir / "final.ckpt").string(), last);
  const Checkpoint back = load_checkpoint((dir / "final.ckpt").string());
  CHECK(back.next_iter == plan.records.size());
  CHECK(back.optimizer.momentum == 0.9);
  for (std::size_t k = 0; k < last.params.tensors.size(); ++k) {
    CHECK(back.params.tensors[k].data == last.params.tensors[k].data);
    CHECK(back.optimizer.velocity[k].data == last.optimizer.velocity[k].data);
  }
  CHECK(back.model.channels == opt.model.channels);
  std::filesystem::remove_all(dir);
}

TEST_CASE("corrupt checkpoints are rejected") {
  const auto dir = temp_dir("multigrid_test_badckpt");
  {
    std::ofstream out(dir / "bad.ckpt", std::ios::binary);
    out << "MGCK\x07garbage";
  }
  CHECK_THROWS_AS(load_checkpoint((dir / "bad.ckpt").string()), Error);
  CHECK_THROWS_AS(load_checkpoint((dir / "missing.ckpt").string()), Error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("a diverging run aborts naming the iteration") {
  const Dataset ds = small_dataset();
  CompiledPlan plan = compile(short_recipe(false));
  for (auto& r : plan.records) r.lr = 1e30;
  try {
    train(plan, ds, small_options(1));
    FAIL("expected a numeric error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNumeric);
    CHECK(std::string(e.what()).find("iter ") != std::string::npos);
  }
}

TEST_CASE("untrained parameters score at chance") {
  SynthSpec spec;
  spec.num_videos = 500;
  spec.seed = 77;
  const Dataset val = generate(spec);
  ModelConfig m;
  const auto params = init_params<float>(m, 8);
  EvalSettings s;
  s.clips = 2;
  const EvalResult r = evaluate(m, params, val, s);
  const double sigma = std::sqrt(0.125 * 0.875 / 500);
  CHECK(r.videos == 500);
  CHECK(std::abs(r.top1 - 0.125) <= 3 * sigma);
  CHECK(r.top_n >= r.top1);
}

TEST_CASE("multi-clip evaluation") {
  SynthSpec spec;
  spec.num_videos = 40;
  spec.frames = 16;  // exactly one clip of 8 frames at stride 2
  const Dataset ds = generate(spec);
  ModelConfig m;
  m.channels = {4, 8, 8};
  const auto params = init_params<float>(m, 2);
  EvalSettings one;
  one.clips = 1;

  SUBCASE("one clip equals a plain forward pass") {
    int correct = 0;
    for (std::size_t v = 0; v < ds.size(); ++v) {
      const Clip& c = ds.clips[v];
      const GridSpec g = testing_grid({c.frames, c.height, c.width}, one.shape, one.short_side, 2, 0, 1);
      const Clip x = resample(c, g);
      Tensor<float> batch({1, x.frames, x.height, x.width, 1});
      batch.data = x.data;
      const auto logits = forward_eval(m, params, batch);
      const auto best = std::max_element(logits.data.begin(), logits.data.end()) - logits.data.begin();
      if (best == ds.labels[v]) ++correct;
    }
    CHECK(evaluate(m, params, ds, one).top1 == doctest::Approx(correct / 40.0));
  }
  SUBCASE("averaging identical clips changes nothing") {
    EvalSettings many = one;
    many.clips = 10;
    const auto a = evaluate(m, params, ds, one);
    const auto b = evaluate(m, params, ds, many);
    CHECK(a.top1 == b.top1);
    CHECK(a.top_n == b.top_n);
    const auto sa = video_scores(m, params, ds.clips[3], one);
    const auto sb = video_scores(m, params, ds.clips[3], many);
    for (std::size_t c = 0; c < sa.size(); ++c) CHECK(sa[c] == doctest::Approx(sb[c]).epsilon(1e-6));
  }
  SUBCASE("thread count does not change the result") {
    EvalSettings par = one;
    par.threads = 3;
    CHECK(evaluate(m, params, ds, one).top1 == evaluate(m, params, ds, par).top1);
  }
}
