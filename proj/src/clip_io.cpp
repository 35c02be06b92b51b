// Copyright 2026 The Multigrid Authors
// SPDX-License-Identifier: Apache-2.0

#include "multigrid/clip_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "multigrid/error.hpp"

namespace multigrid {
namespace {

constexpr char kMagic[4] = {'C', 'L', 'B', '1'};
constexpr std::size_t kHeaderBytes = 4 + 4 * 4;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

}  // namespace

std::vector<std::uint8_t> encode_clipbin(const Clip& clip) {
  if (clip.frames < 1 || clip.height < 1 || clip.width < 1 || clip.channels < 1 ||
      clip.data.size() !=
          static_cast<std::size_t>(clip.frames) * clip.height * clip.width * clip.channels) {
    fail(ErrorCode::kShape, "cannot encode a clip with an inconsistent shape");
  }
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderBytes + 4 * clip.data.size());
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put_u32(out, static_cast<std::uint32_t>(clip.frames));
  put_u32(out, static_cast<std::uint32_t>(clip.height));
  put_u32(out, static_cast<std::uint32_t>(clip.width));
  put_u32(out, static_cast<std::uint32_t>(clip.channels));
  for (float v : clip.data) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

Clip decode_clipbin(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < kHeaderBytes || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    fail(ErrorCode::kIo, "not a CLIPBIN stream (bad magic)");
  }
  const std::uint8_t* p = bytes.data() + 4;
  Clip clip;
  clip.frames = static_cast<int>(get_u32(p));
  clip.height = static_cast<int>(get_u32(p + 4));
  clip.width = static_cast<int>(get_u32(p + 8));
  clip.channels = static_cast<int>(get_u32(p + 12));
  if (clip.frames < 1 || clip.height < 1 || clip.width < 1 || clip.channels < 1) {
    fail(ErrorCode::kIo, "CLIPBIN header has a zero dimension");
  }
  const std::size_t n =
      static_cast<std::size_t>(clip.frames) * clip.height * clip.width * clip.channels;
  if (bytes.size() != kHeaderBytes + 4 * n) {
    fail(ErrorCode::kIo, "CLIPBIN payload size does not match its header");
  }
  clip.data.resize(n);
  p = bytes.data() + kHeaderBytes;
  for (std::size_t i = 0; i < n; ++i) clip.data[i] = std::bit_cast<float>(get_u32(p + 4 * i));
  return clip;
}

void write_clipbin(const std::string& path, const Clip& clip) {
  const auto bytes = encode_clipbin(clip);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::kIo, "failed writing " + path);
}

Clip read_clipbin(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_clipbin(bytes);
}

}  // namespace multigrid
