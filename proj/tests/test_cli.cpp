// Runs the command-line tool as a subprocess and compares against the library.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "multigrid/checkpoint.hpp"
#include "multigrid/clip_io.hpp"
#include "multigrid/config.hpp"
#include "multigrid/trainer.hpp"

namespace fs = std::filesystem;
using namespace multigrid;

namespace {

const char* kConfig = R"({
  "base_shape": {"b": 4, "t": 8, "h": 32, "w": 32},
  "lr": {"stages": [{"length": 48, "lr": 0.1}, {"length": 32, "lr": 0.01},
                    {"length": 24, "lr": 0.001}, {"length": 24, "lr": 0.0001}],
         "warmup_iters": 4, "warmup_start_lr": 0.01},
  "cycles": {"epoch_multiplier": 2.0, "bn_base_group": 2},
  "sampling": {"short_side_min": 36, "short_side_max": 48, "t_stride_min": 2},
  "data": {"num_videos": 32, "val_videos": 24},
  "model": {"channels": [4, 8, 8]}
})";

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

class Workspace {
 public:
  Workspace() : dir_(fs::temp_directory_path() / "multigrid_cli_test") {
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  ~Workspace() { fs::remove_all(dir_); }
  fs::path operator/(const std::string& name) const { return dir_ / name; }

  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream(dir_ / name) << text;
    return dir_ / name;
  }

  Run run(const std::string& args) const {
    const fs::path out = dir_ / "stdout.txt", err = dir_ / "stderr.txt";
    const std::string cmd = std::string("\"") + MULTIGRID_CLI + "\" " + args + " > \"" + out.string() + "\" 2> \"" +
                            err.string() + "\"";
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
  }

 private:
  fs::path dir_;
};

}  // namespace

TEST_CASE("resample with the identity grid keeps the payload byte for byte") {
  Workspace ws;
  Clip clip = Clip::zeros(5, 6, 7, 2);
  for (std::size_t i = 0; i < clip.size(); ++i) clip.data[i] = std::sin(static_cast<float>(i)) * 3.0f;
  write_clipbin((ws / "in.clb").string(), clip);
  const Run r = ws.run("resample --in " + (ws / "in.clb").string() + " --out " + (ws / "out.clb").string());
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(slurp(ws / "in.clb") == slurp(ws / "out.clb"));

  const Run crop = ws.run("resample --in " + (ws / "in.clb").string() + " --out " + (ws / "crop.clb").string() +
                          " --t-span 4 --t-stride 2 --span-h 4 --stride-h 2 --offset-y 1");
  REQUIRE_MESSAGE(crop.code == 0, crop.err);
  const Clip c = read_clipbin((ws / "crop.clb").string());
  CHECK(c.frames == 2);
  CHECK(c.height == 2);
  CHECK(c.width == 7);
  CHECK(c.at(1, 1, 3, 1) == clip.at(2, 3, 3, 1));

  const Run bad = ws.run("resample --in " + (ws / "in.clb").string() + " --out " + (ws / "bad.clb").string() +
                         " --offset-x 2");
  CHECK(bad.code != 0);
}

TEST_CASE("plan command summaries") {
  Workspace ws;
  const std::string root = MULTIGRID_SOURCE_DIR;
  const Run mg = ws.run("plan --config " + root + "/configs/kinetics_multigrid.json --baseline " + root +
                        "/configs/kinetics_baseline.json --summary --out " + (ws / "plan.jsonl").string());
  REQUIRE_MESSAGE(mg.code == 0, mg.err);
  const auto s = nlohmann::json::parse(mg.out);
  CHECK(s["iteration_ratio_vs_baseline"].get<double>() == doctest::Approx(3.4).epsilon(0.03));
  std::ifstream plan(ws / "plan.jsonl");
  std::string first;
  std::getline(plan, first);
  const auto rec = nlohmann::json::parse(first);
  for (const char* key : {"iter", "phase", "long_idx", "short_m", "b", "t", "h", "w", "lr", "bn_group", "lr_stage",
                          "cum_clips", "epoch"}) {
    CHECK(rec.contains(key));
  }

  const Run self = ws.run("plan --config " + root + "/configs/kinetics_baseline.json --baseline " + root +
                          "/configs/kinetics_baseline.json --summary");
  REQUIRE(self.code == 0);
  const auto b = nlohmann::json::parse(self.out);
  CHECK(b["iteration_ratio_vs_baseline"].get<double>() == 1.0);
  CHECK(b["flops_proxy_ratio"].get<double>() == 1.0);
  CHECK(b["flops_proxy_fraction"].get<double>() == 1.0);
  CHECK(b["epochs"].get<double>() == doctest::Approx(238.93).epsilon(1e-4));

  const Run csv = ws.run("plan --config " + root + "/configs/toy_multigrid.json --csv " + (ws / "s.csv").string());
  REQUIRE(csv.code == 0);
  CHECK(slurp(ws / "s.csv").rfind("plan,metric,value\n", 0) == 0);
}

TEST_CASE("one LR stage with fine-tuning is a config error naming the stages") {
  Workspace ws;
  auto j = nlohmann::json::parse(kConfig);
  j["lr"]["stages"] = {{{"length", 100}, {"lr", 0.1}}};
  const auto path = ws.write("one_stage.json", j.dump());
  const Run r = ws.run("plan --config " + path.string() + " --out " + (ws / "p.jsonl").string());
  CHECK(r.code != 0);
  CHECK(r.err.find("stages") != std::string::npos);

  const auto typo = ws.write("typo.json", R"({"base_shape": {"b": 1, "t": 1, "h": 2, "w": 2, "c": 3}})");
  const Run t = ws.run("plan --config " + typo.string());
  CHECK(t.code != 0);
  CHECK(t.err.find("base_shape.c") != std::string::npos);
}

TEST_CASE("train is deterministic and eval matches the library") {
  Workspace ws;
  const auto cfg_path = ws.write("cfg.json", kConfig);
  const std::string common = "train --config " + cfg_path.string() + " --seed 7 ";
  const Run a = ws.run(common + "--metrics " + (ws / "a.jsonl").string() + " --out " + (ws / "a.ckpt").string());
  REQUIRE_MESSAGE(a.code == 0, a.err);
  const Run b = ws.run(common + "--metrics " + (ws / "b.jsonl").string() + " --out " + (ws / "b.ckpt").string() +
                       " --threads 2");
  REQUIRE_MESSAGE(b.code == 0, b.err);
  CHECK(slurp(ws / "a.jsonl").size() > 0);
  CHECK(slurp(ws / "a.jsonl") == slurp(ws / "b.jsonl"));
  CHECK(slurp(ws / "a.ckpt") == slurp(ws / "b.ckpt"));

  // Training from a dumped copy of the dataset gives the same run.
  const Run dump = ws.run("synth --config " + cfg_path.string() + " --out " + (ws / "data").string());
  REQUIRE_MESSAGE(dump.code == 0, dump.err);
  const Run c = ws.run(common + "--data " + (ws / "data").string() + " --metrics " + (ws / "c.jsonl").string() +
                       " --out " + (ws / "c.ckpt").string());
  REQUIRE(c.code == 0);
  CHECK(slurp(ws / "a.jsonl") == slurp(ws / "c.jsonl"));

  const Run e1 = ws.run("eval --config " + cfg_path.string() + " --checkpoint " + (ws / "a.ckpt").string() +
                        " --clips 10");
  REQUIRE_MESSAGE(e1.code == 0, e1.err);
  const Run e2 = ws.run("eval --config " + cfg_path.string() + " --checkpoint " + (ws / "a.ckpt").string() +
                        " --clips 10 --threads 3");
  CHECK(e1.out == e2.out);
  const auto shown = nlohmann::json::parse(e1.out);

  const ExperimentConfig cfg = parse_experiment_config(kConfig);
  const Dataset val = generate(*cfg.val_data);
  const Checkpoint ck = load_checkpoint((ws / "a.ckpt").string());
  EvalSettings s = cfg.eval;
  s.clips = 10;
  const EvalResult lib = evaluate(cfg.model, ck.params, val, s);
  CHECK(shown["top1"].get<double>() == lib.top1);
  CHECK(shown["top_n"].get<double>() == lib.top_n);
  CHECK(shown["videos"].get<std::int64_t>() == 24);

  // The checkpoint written by the CLI equals a library run with the same seed.
  TrainOptions opt;
  opt.model = cfg.model;
  opt.seed = 7;
  const TrainResult direct = train(compile(cfg.schedule), generate(*cfg.train_data), opt);
  for (std::size_t k = 0; k < direct.params.tensors.size(); ++k) {
    CHECK(direct.params.tensors[k].data == ck.params.tensors[k].data);
  }
}
