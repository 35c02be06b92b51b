// Copyright 2026 The Multigrid Authors
// SPDX-License-Identifier: Apache-2.0

#include "multigrid/synth_data.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include "json.hpp"

#include "multigrid/clip_io.hpp"
#include "multigrid/error.hpp"
#include "multigrid/rng.hpp"

namespace multigrid {
namespace {

// Signed toroidal distance from c to p on a ring of length n, in [-n/2, n/2).
double wrap_delta(double p, double c, double n) {
  double d = std::fmod(p - c, n);
  if (d < -n / 2) d += n;
  if (d >= n / 2) d -= n;
  return d;
}

}  // namespace

void SynthSpec::validate() const {
  if (num_videos < 1) fail(ErrorCode::kConfig, "data.num_videos: must be >= 1");
  if (num_directions < 1 || speeds.empty() || num_classes() < 2) {
    fail(ErrorCode::kConfig, "data: need at least 2 classes (directions x speeds)");
  }
  if (frames < 1 || height < 1 || width < 1) fail(ErrorCode::kConfig, "data: source shape must be >= 1");
  if (!(blob_sigma > 0) || noise < 0) fail(ErrorCode::kConfig, "data: blob_sigma > 0 and noise >= 0 required");
}

SourceShape Dataset::source_shape() const {
  if (clips.empty()) return {};
  return {clips.front().frames, clips.front().height, clips.front().width};
}

Clip generate_video(const SynthSpec& spec, std::int64_t index, int* label) {
  const int classes = spec.num_classes();
  const int y = static_cast<int>(index % classes);
  const int speeds = static_cast<int>(spec.speeds.size());
  const int direction = y / speeds;
  const double speed = spec.speeds[y % speeds];
  const double angle = 2.0 * std::numbers::pi * direction / spec.num_directions;
  const double vx = speed * std::cos(angle);
  const double vy = speed * std::sin(angle);

  Rng rng = make_rng(spec.seed, {static_cast<std::uint64_t>(index), 0x5E17});
  const double x0 = uniform(rng, 0.0, spec.width);
  const double y0 = uniform(rng, 0.0, spec.height);
  const double inv = 1.0 / (2.0 * spec.blob_sigma * spec.blob_sigma);

  Clip clip = Clip::zeros(spec.frames, spec.height, spec.width, 1);
  std::vector<double> gx(spec.width), gy(spec.height);
  for (int f = 0; f < spec.frames; ++f) {
    const double cx = x0 + f * vx;
    const double cy = y0 + f * vy;
    for (int x = 0; x < spec.width; ++x) {
      const double d = wrap_delta(x, cx, spec.width);
      gx[x] = std::exp(-d * d * inv);
    }
    for (int r = 0; r < spec.height; ++r) {
      const double d = wrap_delta(r, cy, spec.height);
      gy[r] = std::exp(-d * d * inv);
    }
    for (int r = 0; r < spec.height; ++r) {
      for (int x = 0; x < spec.width; ++x) {
        double v = gy[r] * gx[x];
        if (spec.noise > 0) v += spec.noise * standard_normal(rng);
        clip.at(f, r, x, 0) = static_cast<float>(v);
      }
    }
  }
  if (label) *label = y;
  return clip;
}

Dataset generate(const SynthSpec& spec) {
  spec.validate();
  Dataset ds;
  ds.num_classes = spec.num_classes();
  ds.clips.reserve(static_cast<std::size_t>(spec.num_videos));
  ds.labels.reserve(static_cast<std::size_t>(spec.num_videos));
  for (std::int64_t i = 0; i < spec.num_videos; ++i) {
    int y = 0;
    ds.clips.push_back(generate_video(spec, i, &y));
    ds.labels.push_back(y);
  }
  return ds;
}

Batch next_batch(const Dataset& dataset, const IterationRecord& record, std::uint64_t seed,
                 SpanPolicy policy) {
  if (dataset.clips.empty()) fail(ErrorCode::kInvalidArgument, "next_batch: empty dataset");
  const Shape4D& s = record.shape;
  const int channels = dataset.clips.front().channels;
  Batch batch;
  batch.data = Tensor<float>({s.b, s.t, s.h, s.w, channels});
  batch.labels.resize(static_cast<std::size_t>(s.b));
  const std::size_t per_clip = static_cast<std::size_t>(s.t * s.h * s.w) * channels;
  const TargetShape target{static_cast<int>(s.t), static_cast<int>(s.h), static_cast<int>(s.w)};
  const SourceShape source = dataset.source_shape();

  Rng rng = make_rng(seed, {static_cast<std::uint64_t>(record.iter), 0xBA7C});
  for (std::int64_t k = 0; k < s.b; ++k) {
    const auto idx = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(dataset.size()) - 1));
    const GridSpec grid = draw_training_grid(source, target, record.sample_ranges, rng, policy);
    resample_into(dataset.clips[idx], grid,
                  std::span<float>(batch.data.ptr() + static_cast<std::size_t>(k) * per_clip, per_clip));
    batch.labels[static_cast<std::size_t>(k)] = dataset.labels[idx];
  }
  return batch;
}

void dump_dataset(const Dataset& dataset, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::kIo, "cannot create " + dir + ": " + ec.message());
  nlohmann::json index;
  index["num_classes"] = dataset.num_classes;
  index["videos"] = nlohmann::json::array();
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "clip_%06zu.clb", i);
    write_clipbin((fs::path(dir) / name).string(), dataset.clips[i]);
    index["videos"].push_back({{"file", name}, {"label", dataset.labels[i]}});
  }
  std::ofstream out(fs::path(dir) / "index.json");
  if (!out) fail(ErrorCode::kIo, "cannot write index.json in " + dir);
  out << index.dump(1) << "\n";
}

Dataset load_dataset(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream in(fs::path(dir) / "index.json");
  if (!in) fail(ErrorCode::kIo, "no index.json in " + dir);
  nlohmann::json index;
  try {
    in >> index;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kIo, std::string("bad index.json: ") + e.what());
  }
  Dataset ds;
  ds.num_classes = index.at("num_classes").get<int>();
  for (const auto& v : index.at("videos")) {
    ds.clips.push_back(read_clipbin((fs::path(dir) / v.at("file").get<std::string>()).string()));
    ds.labels.push_back(v.at("label").get<int>());
    if (ds.labels.back() < 0 || ds.labels.back() >= ds.num_classes) {
      fail(ErrorCode::kIo, "label out of range in index.json");
    }
    const Clip& c = ds.clips.back();
    const Clip& first = ds.clips.front();
    if (c.frames != first.frames || c.height != first.height || c.width != first.width ||
        c.channels != first.channels) {
      fail(ErrorCode::kIo, "dataset clips must share one source shape");
    }
  }
  return ds;
}

}  // namespace multigrid
