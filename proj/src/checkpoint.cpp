// Copyright 2026 The Multigrid Authors
// SPDX-License-Identifier: Apache-2.0

#include "multigrid/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

#include "multigrid/error.hpp"

namespace multigrid {
namespace {

constexpr char kMagic[4] = {'M', 'G', 'C', 'K'};

enum class Kind : std::uint32_t { kParam = 0, kBuffer = 1, kVelocity = 2 };

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void tensor(Kind kind, const std::string& name, const Tensor<float>& t) {
    u32(static_cast<std::uint32_t>(kind));
    u32(static_cast<std::uint32_t>(name.size()));
    bytes(name.data(), name.size());
    u32(static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape) u32(static_cast<std::uint32_t>(d));
    for (float v : t.data) u32(std::bit_cast<std::uint32_t>(v));
  }
  const std::vector<std::uint8_t>& data() const { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::vector<std::uint8_t> data) : in_(std::move(data)) {}
  const std::uint8_t* take(std::size_t n) {
    if (pos_ + n > in_.size()) fail(ErrorCode::kIo, "checkpoint is truncated");
    const std::uint8_t* p = in_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::uint32_t u32() {
    const auto* p = take(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    const auto* p = take(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  bool done() const { return pos_ == in_.size(); }

 private:
  std::vector<std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  Writer w;
  w.bytes(kMagic, 4);
  w.u32(kCheckpointVersion);
  const ModelConfig& m = ckpt.model;
  w.u32(static_cast<std::uint32_t>(m.in_channels));
  w.u32(static_cast<std::uint32_t>(m.num_classes));
  w.u32(static_cast<std::uint32_t>(m.channels.size()));
  for (int c : m.channels) w.u32(static_cast<std::uint32_t>(c));
  for (int k : m.stem_kernel) w.u32(static_cast<std::uint32_t>(k));
  for (int s : m.stem_stride) w.u32(static_cast<std::uint32_t>(s));
  w.u32(static_cast<std::uint32_t>(m.block_kernel));
  w.f64(ckpt.optimizer.momentum);
  w.f64(ckpt.optimizer.weight_decay);
  w.u64(ckpt.seed);
  w.u64(ckpt.next_iter);

  const auto& p = ckpt.params;
  const std::size_t count = p.tensors.size() + p.buffers.size() + ckpt.optimizer.velocity.size();
  w.u32(static_cast<std::uint32_t>(count));
  for (std::size_t i = 0; i < p.tensors.size(); ++i) w.tensor(Kind::kParam, p.names[i], p.tensors[i]);
  for (std::size_t i = 0; i < p.buffers.size(); ++i) w.tensor(Kind::kBuffer, p.buffer_names[i], p.buffers[i]);
  for (std::size_t i = 0; i < ckpt.optimizer.velocity.size(); ++i) {
    w.tensor(Kind::kVelocity, p.names.at(i), ckpt.optimizer.velocity[i]);
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(w.data().data()), static_cast<std::streamsize>(w.data().size()));
  if (!out) fail(ErrorCode::kIo, "failed writing " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path);
  Reader r(std::vector<std::uint8_t>((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>()));
  if (std::memcmp(r.take(4), kMagic, 4) != 0) fail(ErrorCode::kIo, path + " is not a checkpoint");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    fail(ErrorCode::kIo, "unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt;
  ModelConfig& m = ckpt.model;
  m.in_channels = static_cast<int>(r.u32());
  m.num_classes = static_cast<int>(r.u32());
  m.channels.resize(r.u32());
  for (int& c : m.channels) c = static_cast<int>(r.u32());
  for (int& k : m.stem_kernel) k = static_cast<int>(r.u32());
  for (int& s : m.stem_stride) s = static_cast<int>(r.u32());
  m.block_kernel = static_cast<int>(r.u32());
  m.validate();
  ckpt.optimizer.momentum = r.f64();
  ckpt.optimizer.weight_decay = r.f64();
  ckpt.seed = r.u64();
  ckpt.next_iter = r.u64();

  // Shapes and names come from the config; the file must match them exactly.
  ckpt.params = init_params<float>(m, 0);
  auto& p = ckpt.params;
  ckpt.optimizer.velocity.clear();
  for (const auto& t : p.tensors) ckpt.optimizer.velocity.emplace_back(t.shape);

  const std::uint32_t count = r.u32();
  if (count != p.tensors.size() * 2 + p.buffers.size()) fail(ErrorCode::kIo, "checkpoint tensor count mismatch");
  for (std::uint32_t n = 0; n < count; ++n) {
    const auto kind = static_cast<Kind>(r.u32());
    const std::uint32_t len = r.u32();
    const auto* chars = r.take(len);
    const std::string name(reinterpret_cast<const char*>(chars), len);
    std::vector<std::int64_t> shape(r.u32());
    for (auto& d : shape) d = r.u32();
    Tensor<float>* dst = nullptr;
    if (kind == Kind::kParam || kind == Kind::kVelocity) {
      for (std::size_t i = 0; i < p.names.size(); ++i) {
        if (p.names[i] == name) dst = kind == Kind::kParam ? &p.tensors[i] : &ckpt.optimizer.velocity[i];
      }
    } else if (kind == Kind::kBuffer) {
      for (std::size_t i = 0; i < p.buffer_names.size(); ++i) {
        if (p.buffer_names[i] == name) dst = &p.buffers[i];
      }
    }
    if (!dst || dst->shape != shape) {
      fail(ErrorCode::kIo, "checkpoint tensor " + name + " does not match the model layout");
    }
    const auto* raw = r.take(4 * dst->size());
    for (std::size_t i = 0; i < dst->size(); ++i) {
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(raw[4 * i + b]) << (8 * b);
      dst->data[i] = std::bit_cast<float>(bits);
    }
  }
  if (!r.done()) fail(ErrorCode::kIo, "trailing bytes after checkpoint payload");
  return ckpt;
}

}  // namespace multigrid
