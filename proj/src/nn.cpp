// Copyright 2026 The Multigrid Authors
// SPDX-License-Identifier: Apache-2.0

#include "multigrid/nn.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

#include "multigrid/error.hpp"

namespace multigrid {

std::string shape_string(const std::vector<std::int64_t>& shape) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ")";
  return os.str();
}

namespace nn {
namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

struct ConvDims {
  std::int64_t n, ti, hi, wi, ci;
  int kt, kh, kw;
  std::int64_t co;
  std::int64_t to, ho, wo;
  std::int64_t rows() const { return to * ho * wo; }
  std::int64_t cols() const { return static_cast<std::int64_t>(kt) * kh * kw * ci; }
};

template <typename T>
ConvDims conv_dims(const Tensor<T>& x, const Tensor<T>& weight, const Conv3dGeometry& g) {
  if (x.rank() != 5 || weight.rank() != 5) {
    fail(ErrorCode::kShape, "conv3d expects a rank-5 input and a rank-5 weight");
  }
  if (x.dim(4) != weight.dim(3)) {
    fail(ErrorCode::kShape, "conv3d channel mismatch: input " + shape_string(x.shape) + ", weight " +
                                shape_string(weight.shape));
  }
  ConvDims d{x.dim(0), x.dim(1), x.dim(2), x.dim(3), x.dim(4),
             static_cast<int>(weight.dim(0)), static_cast<int>(weight.dim(1)),
             static_cast<int>(weight.dim(2)), weight.dim(4), 0, 0, 0};
  d.to = conv_out_extent(d.ti, d.kt, g.stride[0], g.pad[0]);
  d.ho = conv_out_extent(d.hi, d.kh, g.stride[1], g.pad[1]);
  d.wo = conv_out_extent(d.wi, d.kw, g.stride[2], g.pad[2]);
  return d;
}

template <typename T>
void im2col(const T* x, const ConvDims& d, const Conv3dGeometry& g, T* col) {
  const std::size_t ci = static_cast<std::size_t>(d.ci);
  for (std::int64_t ot = 0; ot < d.to; ++ot) {
    for (std::int64_t oh = 0; oh < d.ho; ++oh) {
      for (std::int64_t ow = 0; ow < d.wo; ++ow) {
        for (int a = 0; a < d.kt; ++a) {
          const std::int64_t it = ot * g.stride[0] - g.pad[0] + a;
          for (int b = 0; b < d.kh; ++b) {
            const std::int64_t ih = oh * g.stride[1] - g.pad[1] + b;
            for (int c = 0; c < d.kw; ++c, col += ci) {
              const std::int64_t iw = ow * g.stride[2] - g.pad[2] + c;
              if (it < 0 || it >= d.ti || ih < 0 || ih >= d.hi || iw < 0 || iw >= d.wi) {
                std::fill(col, col + ci, T(0));
              } else {
                std::memcpy(col, x + ((it * d.hi + ih) * d.wi + iw) * d.ci, ci * sizeof(T));
              }
            }
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* col, const ConvDims& d, const Conv3dGeometry& g, T* dx) {
  for (std::int64_t ot = 0; ot < d.to; ++ot) {
    for (std::int64_t oh = 0; oh < d.ho; ++oh) {
      for (std::int64_t ow = 0; ow < d.wo; ++ow) {
        for (int a = 0; a < d.kt; ++a) {
          const std::int64_t it = ot * g.stride[0] - g.pad[0] + a;
          for (int b = 0; b < d.kh; ++b) {
            const std::int64_t ih = oh * g.stride[1] - g.pad[1] + b;
            for (int c = 0; c < d.kw; ++c, col += d.ci) {
              const std::int64_t iw = ow * g.stride[2] - g.pad[2] + c;
              if (it < 0 || it >= d.ti || ih < 0 || ih >= d.hi || iw < 0 || iw >= d.wi) continue;
              T* dst = dx + ((it * d.hi + ih) * d.wi + iw) * d.ci;
              for (std::int64_t k = 0; k < d.ci; ++k) dst[k] += col[k];
            }
          }
        }
      }
    }
  }
}

template <typename T>
std::int64_t per_clip(const Tensor<T>& x) {
  return static_cast<std::int64_t>(x.size()) / (x.dim(0) * x.shape.back());
}

}  // namespace

std::int64_t conv_out_extent(std::int64_t in, int kernel, int stride, int pad) {
  const std::int64_t padded = in + 2 * static_cast<std::int64_t>(pad);
  if (padded < kernel || stride < 1) {
    std::ostringstream os;
    os << "conv3d input extent " << in << " with padding " << pad << " is smaller than kernel "
       << kernel;
    fail(ErrorCode::kShape, os.str());
  }
  return (padded - kernel) / stride + 1;
}

template <typename T>
Tensor<T> conv3d_forward(const Tensor<T>& x, const Tensor<T>& weight, const Conv3dGeometry& geom) {
  const ConvDims d = conv_dims(x, weight, geom);
  Tensor<T> y({d.n, d.to, d.ho, d.wo, d.co});
  const std::int64_t rows = d.rows(), cols = d.cols();
  std::vector<T> col(static_cast<std::size_t>(rows * cols));
  ConstMatMap<T> w(weight.ptr(), cols, d.co);
  const std::int64_t in_stride = d.ti * d.hi * d.wi * d.ci;
  for (std::int64_t n = 0; n < d.n; ++n) {
    im2col(x.ptr() + n * in_stride, d, geom, col.data());
    MatMap<T> out(y.ptr() + n * rows * d.co, rows, d.co);
    out.noalias() = ConstMatMap<T>(col.data(), rows, cols) * w;
  }
  return y;
}

template <typename T>
void conv3d_backward(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& dy,
                     const Conv3dGeometry& geom, Tensor<T>* dx, Tensor<T>& dweight) {
  const ConvDims d = conv_dims(x, weight, geom);
  if (dy.shape != std::vector<std::int64_t>{d.n, d.to, d.ho, d.wo, d.co}) {
    fail(ErrorCode::kShape, "conv3d_backward: gradient shape " + shape_string(dy.shape) +
                                " does not match the forward output");
  }
  if (dweight.shape != weight.shape) dweight = Tensor<T>(weight.shape);
  if (dx) *dx = Tensor<T>(x.shape);
  const std::int64_t rows = d.rows(), cols = d.cols();
  std::vector<T> col(static_cast<std::size_t>(rows * cols));
  std::vector<T> dcol(dx ? static_cast<std::size_t>(rows * cols) : 0);
  ConstMatMap<T> w(weight.ptr(), cols, d.co);
  MatMap<T> dw(dweight.ptr(), cols, d.co);
  const std::int64_t in_stride = d.ti * d.hi * d.wi * d.ci;
  for (std::int64_t n = 0; n < d.n; ++n) {
    im2col(x.ptr() + n * in_stride, d, geom, col.data());
    ConstMatMap<T> g(dy.ptr() + n * rows * d.co, rows, d.co);
    dw.noalias() += ConstMatMap<T>(col.data(), rows, cols).transpose() * g;
    if (dx) {
      MatMap<T>(dcol.data(), rows, cols).noalias() = g * w.transpose();
      col2im_add(dcol.data(), d, geom, dx->ptr() + n * in_stride);
    }
  }
}

template <typename T>
Tensor<T> batchnorm_forward_train(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                                  std::int64_t group, BatchNormCache<T>* cache,
                                  Tensor<T>* running_mean, Tensor<T>* running_var) {
  const std::int64_t n = x.dim(0);
  const std::int64_t c = x.shape.back();
  if (group < 1 || n % group != 0) {
    fail(ErrorCode::kShape, "batchnorm: group size " + std::to_string(group) +
                                " does not divide batch " + std::to_string(n));
  }
  const std::int64_t groups = n / group;
  const std::int64_t m = group * per_clip(x);  // rows per group
  Tensor<T> y(x.shape);
  Tensor<T> xhat(x.shape);
  std::vector<T> inv_std(static_cast<std::size_t>(groups * c));
  std::vector<double> mean(c), var(c), avg_mean(c, 0.0), avg_var(c, 0.0);

  for (std::int64_t gi = 0; gi < groups; ++gi) {
    const std::int64_t base = gi * m * c;
    std::fill(mean.begin(), mean.end(), 0.0);
    std::fill(var.begin(), var.end(), 0.0);
    for (std::int64_t r = 0; r < m; ++r) {
      const T* row = x.ptr() + base + r * c;
      for (std::int64_t k = 0; k < c; ++k) mean[k] += row[k];
    }
    for (std::int64_t k = 0; k < c; ++k) mean[k] /= static_cast<double>(m);
    for (std::int64_t r = 0; r < m; ++r) {
      const T* row = x.ptr() + base + r * c;
      for (std::int64_t k = 0; k < c; ++k) {
        const double dv = row[k] - mean[k];
        var[k] += dv * dv;
      }
    }
    for (std::int64_t k = 0; k < c; ++k) {
      var[k] /= static_cast<double>(m);
      inv_std[gi * c + k] = static_cast<T>(1.0 / std::sqrt(var[k] + kBatchNormEps));
      avg_mean[k] += mean[k] / static_cast<double>(groups);
      const double unbiased = m > 1 ? var[k] * static_cast<double>(m) / static_cast<double>(m - 1) : var[k];
      avg_var[k] += unbiased / static_cast<double>(groups);
    }
    for (std::int64_t r = 0; r < m; ++r) {
      const std::int64_t off = base + r * c;
      for (std::int64_t k = 0; k < c; ++k) {
        const T h = static_cast<T>((x.data[off + k] - mean[k])) * inv_std[gi * c + k];
        xhat.data[off + k] = h;
        y.data[off + k] = gamma.data[k] * h + beta.data[k];
      }
    }
  }

  if (running_mean && running_var) {
    for (std::int64_t k = 0; k < c; ++k) {
      running_mean->data[k] = static_cast<T>((1.0 - kBatchNormMomentum) * running_mean->data[k] +
                                             kBatchNormMomentum * avg_mean[k]);
      running_var->data[k] = static_cast<T>((1.0 - kBatchNormMomentum) * running_var->data[k] +
                                            kBatchNormMomentum * avg_var[k]);
    }
  }
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->inv_std = std::move(inv_std);
    cache->group = group;
  }
  return y;
}

template <typename T>
Tensor<T> batchnorm_forward_eval(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                                 const Tensor<T>& running_mean, const Tensor<T>& running_var) {
  const std::int64_t c = x.shape.back();
  std::vector<T> scale(c), shift(c);
  for (std::int64_t k = 0; k < c; ++k) {
    scale[k] = static_cast<T>(gamma.data[k] / std::sqrt(static_cast<double>(running_var.data[k]) + kBatchNormEps));
    shift[k] = beta.data[k] - scale[k] * running_mean.data[k];
  }
  Tensor<T> y(x.shape);
  const std::size_t rows = x.size() / static_cast<std::size_t>(c);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::int64_t k = 0; k < c; ++k) y.data[r * c + k] = x.data[r * c + k] * scale[k] + shift[k];
  }
  return y;
}

template <typename T>
Tensor<T> batchnorm_backward(const Tensor<T>& dy, const Tensor<T>& gamma, const BatchNormCache<T>& cache,
                             Tensor<T>& dgamma, Tensor<T>& dbeta) {
  const std::int64_t c = dy.shape.back();
  const std::int64_t groups = dy.dim(0) / cache.group;
  const std::int64_t m = cache.group * per_clip(dy);
  if (dgamma.size() != static_cast<std::size_t>(c)) dgamma = Tensor<T>({c});
  if (dbeta.size() != static_cast<std::size_t>(c)) dbeta = Tensor<T>({c});
  Tensor<T> dx(dy.shape);
  std::vector<double> sum_dxh(c), sum_dxh_xh(c);
  for (std::int64_t gi = 0; gi < groups; ++gi) {
    const std::int64_t base = gi * m * c;
    std::fill(sum_dxh.begin(), sum_dxh.end(), 0.0);
    std::fill(sum_dxh_xh.begin(), sum_dxh_xh.end(), 0.0);
    for (std::int64_t r = 0; r < m; ++r) {
      const std::int64_t off = base + r * c;
      for (std::int64_t k = 0; k < c; ++k) {
        const double g = dy.data[off + k];
        const double h = cache.xhat.data[off + k];
        dgamma.data[k] += static_cast<T>(g * h);
        dbeta.data[k] += static_cast<T>(g);
        sum_dxh[k] += g * gamma.data[k];
        sum_dxh_xh[k] += g * gamma.data[k] * h;
      }
    }
    for (std::int64_t r = 0; r < m; ++r) {
      const std::int64_t off = base + r * c;
      for (std::int64_t k = 0; k < c; ++k) {
        const double dxh = static_cast<double>(dy.data[off + k]) * gamma.data[k];
        const double h = cache.xhat.data[off + k];
        dx.data[off + k] = static_cast<T>(static_cast<double>(cache.inv_std[gi * c + k]) /
                                          static_cast<double>(m) *
                                          (static_cast<double>(m) * dxh - sum_dxh[k] - h * sum_dxh_xh[k]));
      }
    }
  }
  return dx;
}

template <typename T>
void relu_inplace(Tensor<T>& x) {
  for (auto& v : x.data) v = v > T(0) ? v : T(0);
}

template <typename T>
void relu_backward_inplace(const Tensor<T>& y, Tensor<T>& dy) {
  for (std::size_t i = 0; i < dy.size(); ++i) {
    if (!(y.data[i] > T(0))) dy.data[i] = T(0);
  }
}

template <typename T>
Tensor<T> global_avg_pool_forward(const Tensor<T>& x) {
  const std::int64_t n = x.dim(0), c = x.shape.back();
  const std::int64_t s = per_clip(x);
  Tensor<T> y({n, c});
  std::vector<double> acc(c);
  for (std::int64_t i = 0; i < n; ++i) {
    std::fill(acc.begin(), acc.end(), 0.0);
    const T* p = x.ptr() + i * s * c;
    for (std::int64_t r = 0; r < s; ++r) {
      for (std::int64_t k = 0; k < c; ++k) acc[k] += p[r * c + k];
    }
    for (std::int64_t k = 0; k < c; ++k) y.data[i * c + k] = static_cast<T>(acc[k] / static_cast<double>(s));
  }
  return y;
}

template <typename T>
Tensor<T> global_avg_pool_backward(const Tensor<T>& dy, const std::vector<std::int64_t>& in_shape) {
  Tensor<T> dx(in_shape);
  const std::int64_t n = in_shape.front(), c = in_shape.back();
  const std::int64_t s = static_cast<std::int64_t>(dx.size()) / (n * c);
  const T inv = T(1) / static_cast<T>(s);
  for (std::int64_t i = 0; i < n; ++i) {
    T* p = dx.ptr() + i * s * c;
    for (std::int64_t r = 0; r < s; ++r) {
      for (std::int64_t k = 0; k < c; ++k) p[r * c + k] = dy.data[i * c + k] * inv;
    }
  }
  return dx;
}

template <typename T>
Tensor<T> linear_forward(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
  const std::int64_t n = x.dim(0), ci = x.dim(1), co = weight.dim(1);
  if (weight.dim(0) != ci || bias.size() != static_cast<std::size_t>(co)) {
    fail(ErrorCode::kShape, "linear: weight " + shape_string(weight.shape) + " incompatible with input " +
                                shape_string(x.shape));
  }
  Tensor<T> y({n, co});
  MatMap<T> out(y.ptr(), n, co);
  out.noalias() = ConstMatMap<T>(x.ptr(), n, ci) * ConstMatMap<T>(weight.ptr(), ci, co);
  out.rowwise() += Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>(bias.ptr(), co);
  return y;
}

template <typename T>
Tensor<T> linear_backward(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& dy,
                          Tensor<T>& dweight, Tensor<T>& dbias) {
  const std::int64_t n = x.dim(0), ci = x.dim(1), co = weight.dim(1);
  if (dweight.shape != weight.shape) dweight = Tensor<T>(weight.shape);
  if (dbias.size() != static_cast<std::size_t>(co)) dbias = Tensor<T>({co});
  ConstMatMap<T> g(dy.ptr(), n, co);
  MatMap<T>(dweight.ptr(), ci, co).noalias() += ConstMatMap<T>(x.ptr(), n, ci).transpose() * g;
  Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>>(dbias.ptr(), co) += g.colwise().sum();
  Tensor<T> dx({n, ci});
  MatMap<T>(dx.ptr(), n, ci).noalias() = g * ConstMatMap<T>(weight.ptr(), ci, co).transpose();
  return dx;
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& logits) {
  const std::int64_t n = logits.dim(0), k = logits.dim(1);
  Tensor<T> p(logits.shape);
  for (std::int64_t i = 0; i < n; ++i) {
    const T* z = logits.ptr() + i * k;
    const T zmax = *std::max_element(z, z + k);
    double sum = 0;
    for (std::int64_t j = 0; j < k; ++j) sum += std::exp(static_cast<double>(z[j] - zmax));
    for (std::int64_t j = 0; j < k; ++j) {
      p.data[i * k + j] = static_cast<T>(std::exp(static_cast<double>(z[j] - zmax)) / sum);
    }
  }
  return p;
}

template <typename T>
T softmax_cross_entropy(const Tensor<T>& logits, std::span<const int> labels, Tensor<T>* dlogits) {
  const std::int64_t n = logits.dim(0), k = logits.dim(1);
  if (static_cast<std::int64_t>(labels.size()) != n) {
    fail(ErrorCode::kShape, "cross-entropy: label count does not match the batch");
  }
  if (dlogits) *dlogits = Tensor<T>(logits.shape);
  double loss = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    const int y = labels[i];
    if (y < 0 || y >= k) fail(ErrorCode::kInvalidArgument, "cross-entropy: label out of range");
    const T* z = logits.ptr() + i * k;
    const double zmax = *std::max_element(z, z + k);
    double sum = 0;
    for (std::int64_t j = 0; j < k; ++j) sum += std::exp(z[j] - zmax);
    const double lse = zmax + std::log(sum);
    loss += lse - z[y];
    if (dlogits) {
      for (std::int64_t j = 0; j < k; ++j) {
        const double p = std::exp(z[j] - lse);
        dlogits->data[i * k + j] = static_cast<T>((p - (j == y ? 1.0 : 0.0)) / static_cast<double>(n));
      }
    }
  }
  return static_cast<T>(loss / static_cast<double>(n));
}

#define MULTIGRID_NN_INSTANTIATE(T)                                                                   \
  template Tensor<T> conv3d_forward(const Tensor<T>&, const Tensor<T>&, const Conv3dGeometry&);       \
  template void conv3d_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,                 \
                                const Conv3dGeometry&, Tensor<T>*, Tensor<T>&);                       \
  template Tensor<T> batchnorm_forward_train(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,    \
                                             std::int64_t, BatchNormCache<T>*, Tensor<T>*, Tensor<T>*); \
  template Tensor<T> batchnorm_forward_eval(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,     \
                                            const Tensor<T>&, const Tensor<T>&);                      \
  template Tensor<T> batchnorm_backward(const Tensor<T>&, const Tensor<T>&, const BatchNormCache<T>&, \
                                        Tensor<T>&, Tensor<T>&);                                      \
  template void relu_inplace(Tensor<T>&);                                                             \
  template void relu_backward_inplace(const Tensor<T>&, Tensor<T>&);                                  \
  template Tensor<T> global_avg_pool_forward(const Tensor<T>&);                                       \
  template Tensor<T> global_avg_pool_backward(const Tensor<T>&, const std::vector<std::int64_t>&);    \
  template Tensor<T> linear_forward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);            \
  template Tensor<T> linear_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,            \
                                     Tensor<T>&, Tensor<T>&);                                         \
  template Tensor<T> softmax(const Tensor<T>&);                                                       \
  template T softmax_cross_entropy(const Tensor<T>&, std::span<const int>, Tensor<T>*);

MULTIGRID_NN_INSTANTIATE(float)
MULTIGRID_NN_INSTANTIATE(double)

#undef MULTIGRID_NN_INSTANTIATE

}  // namespace nn
}  // namespace multigrid
