// Copyright 2026 The Multigrid Authors
// SPDX-License-Identifier: Apache-2.0

#include "multigrid/model.hpp"

#include <cmath>
#include <sstream>

#include "multigrid/error.hpp"
#include "multigrid/nn.hpp"
#include "multigrid/rng.hpp"

namespace multigrid {
namespace {

struct LayerSpec {
  std::array<int, 3> kernel;
  nn::Conv3dGeometry geom;
  int c_in, c_out;
};

std::vector<LayerSpec> layer_specs(const ModelConfig& cfg) {
  std::vector<LayerSpec> specs;
  int c_in = cfg.in_channels;
  for (std::size_t l = 0; l < cfg.channels.size(); ++l) {
    LayerSpec s;
    if (l == 0) {
      s.kernel = cfg.stem_kernel;
      s.geom.stride = cfg.stem_stride;
    } else {
      s.kernel = {cfg.block_kernel, cfg.block_kernel, cfg.block_kernel};
    }
    for (int a = 0; a < 3; ++a) s.geom.pad[a] = s.kernel[a] / 2;
    s.c_in = c_in;
    s.c_out = cfg.channels[l];
    c_in = s.c_out;
    specs.push_back(s);
  }
  return specs;
}

// Tensor indices within ModelParams::tensors.
std::size_t conv_w(std::size_t l) { return 3 * l; }
std::size_t bn_gamma(std::size_t l) { return 3 * l + 1; }
std::size_t bn_beta(std::size_t l) { return 3 * l + 2; }

}  // namespace

void ModelConfig::validate() const {
  if (in_channels < 1 || num_classes < 2 || channels.empty() || block_kernel < 1) {
    fail(ErrorCode::kConfig, "model: need in_channels >= 1, num_classes >= 2, at least one conv layer");
  }
  for (int c : channels) {
    if (c < 1) fail(ErrorCode::kConfig, "model.channels: entries must be >= 1");
  }
  for (int a = 0; a < 3; ++a) {
    if (stem_kernel[a] < 1 || stem_stride[a] < 1) {
      fail(ErrorCode::kConfig, "model: stem kernel and stride must be >= 1");
    }
  }
}

MinimumInput minimum_input(const ModelConfig& cfg) {
  return {cfg.stem_stride[0], cfg.stem_stride[1], cfg.stem_stride[2]};
}

void check_input_shape(const ModelConfig& cfg, const std::vector<std::int64_t>& shape) {
  const MinimumInput m = minimum_input(cfg);
  if (shape.size() != 5 || shape[4] != cfg.in_channels || shape[0] < 1) {
    fail(ErrorCode::kShape, "model input must be (b, t, h, w, " + std::to_string(cfg.in_channels) +
                                "), got " + shape_string(shape));
  }
  if (shape[1] < m.t || shape[2] < m.h || shape[3] < m.w) {
    std::ostringstream os;
    os << "model input " << shape_string(shape) << " is below the network minimum t>=" << m.t
       << ", h>=" << m.h << ", w>=" << m.w;
    fail(ErrorCode::kShape, os.str());
  }
}

template <typename T>
Tensor<T>& ModelParams<T>::get(const std::string& name) {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return tensors[i];
  }
  for (std::size_t i = 0; i < buffer_names.size(); ++i) {
    if (buffer_names[i] == name) return buffers[i];
  }
  fail(ErrorCode::kInvalidArgument, "no model tensor named " + name);
}

template <typename T>
const Tensor<T>& ModelParams<T>::get(const std::string& name) const {
  return const_cast<ModelParams<T>*>(this)->get(name);
}

template <typename T>
ModelParams<T> init_params(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng = make_rng(seed, {0x1A17});
  ModelParams<T> p;
  auto normal = [&](Tensor<T>& t, double stddev) {
    for (auto& v : t.data) v = static_cast<T>(stddev * standard_normal(rng));
  };
  const auto specs = layer_specs(cfg);
  for (std::size_t l = 0; l < specs.size(); ++l) {
    const auto& s = specs[l];
    Tensor<T> w({s.kernel[0], s.kernel[1], s.kernel[2], s.c_in, s.c_out});
    const double fan_in = static_cast<double>(s.kernel[0]) * s.kernel[1] * s.kernel[2] * s.c_in;
    normal(w, std::sqrt(2.0 / fan_in));
    const std::string id = std::to_string(l);
    p.names.push_back("conv" + id + ".weight");
    p.tensors.push_back(std::move(w));
    p.names.push_back("bn" + id + ".gamma");
    p.tensors.emplace_back(std::vector<std::int64_t>{s.c_out}, T(1));
    p.names.push_back("bn" + id + ".beta");
    p.tensors.emplace_back(std::vector<std::int64_t>{s.c_out}, T(0));
    p.buffer_names.push_back("bn" + id + ".running_mean");
    p.buffers.emplace_back(std::vector<std::int64_t>{s.c_out}, T(0));
    p.buffer_names.push_back("bn" + id + ".running_var");
    p.buffers.emplace_back(std::vector<std::int64_t>{s.c_out}, T(1));
  }
  const int feat = cfg.channels.back();
  Tensor<T> fc({feat, cfg.num_classes});
  normal(fc, std::sqrt(1.0 / feat));
  p.names.push_back("fc.weight");
  p.tensors.push_back(std::move(fc));
  p.names.push_back("fc.bias");
  p.tensors.emplace_back(std::vector<std::int64_t>{cfg.num_classes}, T(0));
  return p;
}

template <typename T>
LossAndGrads<T> forward_backward(const ModelConfig& cfg, ModelParams<T>& params, const Tensor<T>& batch,
                                 std::span<const int> labels, std::int64_t bn_group) {
  check_input_shape(cfg, batch.shape);
  const auto specs = layer_specs(cfg);
  const std::size_t layers = specs.size();

  // acts[l] is the post-ReLU output of layer l and the input of layer l + 1.
  std::vector<Tensor<T>> acts(layers);
  std::vector<nn::BatchNormCache<T>> caches(layers);
  const Tensor<T>* x = &batch;
  for (std::size_t l = 0; l < layers; ++l) {
    Tensor<T> c = nn::conv3d_forward(*x, params.tensors[conv_w(l)], specs[l].geom);
    acts[l] = nn::batchnorm_forward_train(c, params.tensors[bn_gamma(l)], params.tensors[bn_beta(l)],
                                          bn_group, &caches[l], &params.buffers[2 * l],
                                          &params.buffers[2 * l + 1]);
    nn::relu_inplace(acts[l]);
    x = &acts[l];
  }
  const std::size_t fc_w = 3 * layers, fc_b = 3 * layers + 1;
  Tensor<T> pooled = nn::global_avg_pool_forward(acts.back());
  Tensor<T> logits = nn::linear_forward(pooled, params.tensors[fc_w], params.tensors[fc_b]);

  LossAndGrads<T> out;
  for (const auto& t : params.tensors) out.grads.emplace_back(t.shape);
  Tensor<T> dlogits;
  out.loss = nn::softmax_cross_entropy(logits, labels, &dlogits);

  Tensor<T> dpooled = nn::linear_backward(pooled, params.tensors[fc_w], dlogits, out.grads[fc_w], out.grads[fc_b]);
  Tensor<T> grad = nn::global_avg_pool_backward(dpooled, acts.back().shape);
  for (std::size_t l = layers; l-- > 0;) {
    nn::relu_backward_inplace(acts[l], grad);
    Tensor<T> dconv = nn::batchnorm_backward(grad, params.tensors[bn_gamma(l)], caches[l],
                                             out.grads[bn_gamma(l)], out.grads[bn_beta(l)]);
    const Tensor<T>& input = l == 0 ? batch : acts[l - 1];
    Tensor<T> dinput;
    nn::conv3d_backward(input, params.tensors[conv_w(l)], dconv, specs[l].geom, l == 0 ? nullptr : &dinput,
                        out.grads[conv_w(l)]);
    grad = std::move(dinput);
  }
  return out;
}

template <typename T>
Tensor<T> forward_eval(const ModelConfig& cfg, const ModelParams<T>& params, const Tensor<T>& batch) {
  check_input_shape(cfg, batch.shape);
  const auto specs = layer_specs(cfg);
  Tensor<T> x = batch;
  for (std::size_t l = 0; l < specs.size(); ++l) {
    Tensor<T> c = nn::conv3d_forward(x, params.tensors[conv_w(l)], specs[l].geom);
    x = nn::batchnorm_forward_eval(c, params.tensors[bn_gamma(l)], params.tensors[bn_beta(l)],
                                   params.buffers[2 * l], params.buffers[2 * l + 1]);
    nn::relu_inplace(x);
  }
  const std::size_t layers = specs.size();
  return nn::linear_forward(nn::global_avg_pool_forward(x), params.tensors[3 * layers],
                            params.tensors[3 * layers + 1]);
}

template struct ModelParams<float>;
template struct ModelParams<double>;
template ModelParams<float> init_params<float>(const ModelConfig&, std::uint64_t);
template ModelParams<double> init_params<double>(const ModelConfig&, std::uint64_t);
template LossAndGrads<float> forward_backward(const ModelConfig&, ModelParams<float>&, const Tensor<float>&,
                                              std::span<const int>, std::int64_t);
template LossAndGrads<double> forward_backward(const ModelConfig&, ModelParams<double>&,
                                               const Tensor<double>&, std::span<const int>, std::int64_t);
template Tensor<float> forward_eval(const ModelConfig&, const ModelParams<float>&, const Tensor<float>&);
template Tensor<double> forward_eval(const ModelConfig&, const ModelParams<double>&, const Tensor<double>&);

}  // namespace multigrid
