// Copyright 2026 The Multigrid Authors
// SPDX-License-Identifier: Apache-2.0

#include "multigrid/sampling_grid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "multigrid/error.hpp"

namespace multigrid {
namespace {

constexpr double kCountTolerance = 1e-9;

int grid_count(double span, double stride) {
  if (!(stride > 0.0) || !(span > 0.0)) return 0;
  return static_cast<int>(std::floor(span / stride + kCountTolerance));
}

bool fits(double offset, double span, int extent) {
  const double slack = kCountTolerance * std::max(1.0, static_cast<double>(extent));
  return offset >= -slack && offset + span <= extent + slack;
}

}  // namespace

Clip Clip::zeros(int frames, int height, int width, int channels) {
  Clip c;
  c.frames = frames;
  c.height = height;
  c.width = width;
  c.channels = channels;
  c.data.assign(static_cast<std::size_t>(frames) * height * width * channels, 0.0f);
  return c;
}

void Clip::validate() const {
  if (frames < 1 || height < 1 || width < 1 || channels < 1) {
    fail(ErrorCode::kShape, "clip dimensions must all be >= 1");
  }
  if (data.size() != static_cast<std::size_t>(frames) * height * width * channels) {
    fail(ErrorCode::kShape, "clip data size does not match its shape");
  }
  for (float v : data) {
    if (!std::isfinite(v)) fail(ErrorCode::kNumeric, "clip contains a non-finite value");
  }
}

GridSpec GridSpec::identity(int frames, int height, int width) {
  GridSpec g;
  g.t_span = frames;
  g.s_span_h = height;
  g.s_span_w = width;
  return g;
}

int GridSpec::out_frames() const { return grid_count(t_span, t_stride); }
int GridSpec::out_height() const { return grid_count(s_span_h, s_stride_h); }
int GridSpec::out_width() const { return grid_count(s_span_w, s_stride_w); }

void GridSampleRanges::validate() const {
  if (!(short_side_min > 0) || !(t_stride_min > 0)) {
    fail(ErrorCode::kInvalidArgument, "grid sample ranges must be positive");
  }
  if (short_side_min > short_side_max || t_stride_min > t_stride_max) {
    fail(ErrorCode::kInvalidArgument, "grid sample ranges need min <= max");
  }
}

void check_grid(const GridSpec& g, SourceShape src) {
  if (g.out_frames() < 1 || g.out_height() < 1 || g.out_width() < 1) {
    fail(ErrorCode::kInvalidGrid, "grid produces an empty output (span / stride < 1)");
  }
  if (!fits(g.t_offset, g.t_span, src.frames) || !fits(g.s_offset_y, g.s_span_h, src.height) ||
      !fits(g.s_offset_x, g.s_span_w, src.width)) {
    std::ostringstream os;
    os << "grid exceeds source extent " << src.frames << "x" << src.height << "x" << src.width
       << " (t: " << g.t_offset << "+" << g.t_span << ", y: " << g.s_offset_y << "+" << g.s_span_h
       << ", x: " << g.s_offset_x << "+" << g.s_span_w << ")";
    fail(ErrorCode::kOutOfBounds, os.str());
  }
}

void resample_into(const Clip& clip, const GridSpec& g, std::span<float> out) {
  check_grid(g, {clip.frames, clip.height, clip.width});
  const int nt = g.out_frames();
  const int nh = g.out_height();
  const int nw = g.out_width();
  const int c = clip.channels;
  if (out.size() != static_cast<std::size_t>(nt) * nh * nw * c) {
    fail(ErrorCode::kShape, "resample output buffer has the wrong size");
  }

  // Per-column interpolation taps, shared by every row and frame.
  struct Tap {
    int i0, i1;
    double frac;
  };
  auto taps = [](double offset, double stride, int n, int extent) {
    std::vector<Tap> result(n);
    for (int k = 0; k < n; ++k) {
      double p = std::clamp(offset + k * stride, 0.0, static_cast<double>(extent - 1));
      int i0 = static_cast<int>(std::floor(p));
      double frac = p - i0;
      int i1 = std::min(i0 + 1, extent - 1);
      result[k] = {i0, i1, frac};
    }
    return result;
  };
  const std::vector<Tap> ys = taps(g.s_offset_y, g.s_stride_h, nh, clip.height);
  const std::vector<Tap> xs = taps(g.s_offset_x, g.s_stride_w, nw, clip.width);

  std::size_t o = 0;
  for (int k = 0; k < nt; ++k) {
    long long f = std::llround(g.t_offset + k * g.t_stride);
    f = std::clamp<long long>(f, 0, clip.frames - 1);
    for (const Tap& ty : ys) {
      for (const Tap& tx : xs) {
        for (int ch = 0; ch < c; ++ch, ++o) {
          const float a = clip.at(static_cast<int>(f), ty.i0, tx.i0, ch);
          // Exact grid points copy the source value untouched.
          if (ty.frac == 0.0 && tx.frac == 0.0) {
            out[o] = a;
            continue;
          }
          const double b = clip.at(static_cast<int>(f), ty.i0, tx.i1, ch);
          const double cc = clip.at(static_cast<int>(f), ty.i1, tx.i0, ch);
          const double d = clip.at(static_cast<int>(f), ty.i1, tx.i1, ch);
          const double top = (1.0 - tx.frac) * a + tx.frac * b;
          const double bottom = (1.0 - tx.frac) * cc + tx.frac * d;
          out[o] = static_cast<float>((1.0 - ty.frac) * top + ty.frac * bottom);
        }
      }
    }
  }
}

Clip resample(const Clip& clip, const GridSpec& grid) {
  check_grid(grid, {clip.frames, clip.height, clip.width});
  Clip out = Clip::zeros(grid.out_frames(), grid.out_height(), grid.out_width(), clip.channels);
  resample_into(clip, grid, out.data);
  return out;
}

namespace {

void check_target(SourceShape source, TargetShape target) {
  if (target.t < 1 || target.h < 1 || target.w < 1) {
    fail(ErrorCode::kInvalidArgument, "target grid shape must be >= 1 in every dimension");
  }
  if (source.frames < 1 || source.height < 1 || source.width < 1) {
    fail(ErrorCode::kInvalidArgument, "source shape must be >= 1 in every dimension");
  }
}

struct StrideRange {
  long long lo, hi;
};

StrideRange integer_strides(const GridSampleRanges& r) {
  StrideRange s{static_cast<long long>(std::ceil(r.t_stride_min - kCountTolerance)),
                static_cast<long long>(std::floor(r.t_stride_max + kCountTolerance))};
  if (s.hi < s.lo) {
    fail(ErrorCode::kInvalidArgument, "temporal stride range contains no integer stride");
  }
  return s;
}

}  // namespace

GridSpec draw_training_grid(SourceShape source, TargetShape target, const GridSampleRanges& ranges,
                            Rng& rng, SpanPolicy policy) {
  check_target(source, target);
  ranges.validate();
  const StrideRange strides = integer_strides(ranges);
  const double short_side = std::min(source.height, source.width);

  if (policy == SpanPolicy::kReject) {
    const double max_factor = short_side / ranges.short_side_min;
    if (target.h * max_factor > source.height + kCountTolerance ||
        target.w * max_factor > source.width + kCountTolerance) {
      fail(ErrorCode::kOutOfBounds, "source too small for the spatial span range");
    }
    if (static_cast<long long>(target.t) * strides.hi > source.frames) {
      fail(ErrorCode::kOutOfBounds, "source too short for the temporal span range");
    }
  }

  GridSpec g;
  const double scale = uniform(rng, ranges.short_side_min, ranges.short_side_max);
  const double factor = short_side / scale;
  g.s_span_h = std::min(target.h * factor, static_cast<double>(source.height));
  g.s_span_w = std::min(target.w * factor, static_cast<double>(source.width));
  g.s_stride_h = g.s_span_h / target.h;
  g.s_stride_w = g.s_span_w / target.w;
  g.s_offset_y = uniform(rng, 0.0, std::max(0.0, source.height - g.s_span_h));
  g.s_offset_x = uniform(rng, 0.0, std::max(0.0, source.width - g.s_span_w));

  const long long stride = uniform_int(rng, strides.lo, strides.hi);
  const long long span = stride * target.t;
  if (span <= source.frames) {
    g.t_stride = static_cast<double>(stride);
    g.t_span = static_cast<double>(span);
    g.t_offset = static_cast<double>(uniform_int(rng, 0, source.frames - span));
  } else {
    g.t_span = source.frames;
    g.t_stride = static_cast<double>(source.frames) / target.t;
    g.t_offset = 0;
  }
  return g;
}

GridSpec testing_grid(SourceShape source, TargetShape target, double short_side, int t_stride,
                      int clip_index, int num_clips) {
  check_target(source, target);
  if (!(short_side > 0) || t_stride < 1 || num_clips < 1 || clip_index < 0 ||
      clip_index >= num_clips) {
    fail(ErrorCode::kInvalidArgument, "invalid testing grid parameters");
  }
  GridSpec g;
  const double factor = std::min(source.height, source.width) / short_side;
  g.s_span_h = std::min(target.h * factor, static_cast<double>(source.height));
  g.s_span_w = std::min(target.w * factor, static_cast<double>(source.width));
  g.s_stride_h = g.s_span_h / target.h;
  g.s_stride_w = g.s_span_w / target.w;
  g.s_offset_y = (source.height - g.s_span_h) / 2.0;
  g.s_offset_x = (source.width - g.s_span_w) / 2.0;

  const long long span = static_cast<long long>(t_stride) * target.t;
  if (span <= source.frames) {
    g.t_stride = t_stride;
    g.t_span = static_cast<double>(span);
    const long long room = source.frames - span;
    g.t_offset = num_clips == 1
                     ? static_cast<double>(room / 2)
                     : static_cast<double>(std::llround(static_cast<double>(clip_index) * room /
                                                        (num_clips - 1)));
  } else {
    g.t_span = source.frames;
    g.t_stride = static_cast<double>(source.frames) / target.t;
    g.t_offset = 0;
  }
  return g;
}

}  // namespace multigrid
