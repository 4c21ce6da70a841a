#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>
#include <vector>

#include "dtwapprox/net/params.hpp"
#include "dtwapprox/net/spec.hpp"

namespace dtwapprox {

// A rectangular batch of equal-length multichannel sequences, stored as one
// channels x (count * len) matrix so each layer runs a single GEMM. Sample s
// occupies the column block [s*len, (s+1)*len).
template <typename Scalar>
struct Batch {
  MatX<Scalar> data;
  int count = 0;
  Eigen::Index len = 0;

  Eigen::Index channels() const { return data.rows(); }
  auto sample(int s) { return data.middleCols(Eigen::Index(s) * len, len); }
  auto sample(int s) const { return data.middleCols(Eigen::Index(s) * len, len); }
};

// Per-layer state captured by a training/inference forward pass and consumed
// by backward.
template <typename Scalar>
struct LayerCache {
  Batch<Scalar> input;
  VecX<Scalar> bn_mean, bn_invstd;                        // statistics used to normalize
  Eigen::Matrix<Eigen::Index, Eigen::Dynamic, Eigen::Dynamic> argmax;  // channel x sample
  Eigen::Index out_len = 0;
};

namespace detail {

inline Eigen::Index conv_out_len(const LayerSpec& l, Eigen::Index in_len) {
  const Eigen::Index span = Eigen::Index(l.kernel - 1) * l.dilation + 1;
  const Eigen::Index padded = in_len + l.pad_left + l.pad_right;
  if (padded < span)
    throw std::invalid_argument("layer " + l.name + ": input of length " +
                                std::to_string(in_len) + " is too short");
  return (padded - span) / l.stride + 1;
}

// Patch matrix for one batch: rows ordered tap-major (k * in_ch + c), one
// column per output position. Out-of-range taps read zero padding.
template <typename Scalar>
void im2col(const LayerSpec& l, const Batch<Scalar>& in, Eigen::Index out_len,
            MatX<Scalar>& M) {
  const Eigen::Index C = in.channels();
  M.setZero(C * l.kernel, Eigen::Index(in.count) * out_len);
  for (int s = 0; s < in.count; ++s) {
    const Eigen::Index in_base = Eigen::Index(s) * in.len;
    const Eigen::Index col_base = Eigen::Index(s) * out_len;
    for (Eigen::Index t = 0; t < out_len; ++t) {
      const Eigen::Index col = col_base + t;
      for (int k = 0; k < l.kernel; ++k) {
        const Eigen::Index u = t * l.stride + Eigen::Index(k) * l.dilation - l.pad_left;
        if (u >= 0 && u < in.len)
          M.col(col).segment(Eigen::Index(k) * C, C) = in.data.col(in_base + u);
      }
    }
  }
}

}  // namespace detail

template <typename Scalar>
void conv1d_forward(const LayerSpec& l, const ParamStore<Scalar>& params,
                    const Batch<Scalar>& in, Batch<Scalar>& out, MatX<Scalar>& scratch) {
  const Eigen::Index out_len = detail::conv_out_len(l, in.len);
  detail::im2col(l, in, out_len, scratch);
  const auto W = params.at(param_name(l, "w")).matrix(l.out_ch, Eigen::Index(l.in_ch) * l.kernel);
  out.count = in.count;
  out.len = out_len;
  out.data.noalias() = W * scratch;
  out.data.colwise() += params.at(param_name(l, "b")).values;
}

template <typename Scalar>
void conv1d_backward(const LayerSpec& l, const ParamStore<Scalar>& params,
                     const LayerCache<Scalar>& cache, const Batch<Scalar>& dout,
                     GradArrays<Scalar>& grads, Batch<Scalar>& din, MatX<Scalar>& scratch) {
  const Batch<Scalar>& in = cache.input;
  detail::im2col(l, in, dout.len, scratch);
  auto& dw = grads[params.index_of(param_name(l, "w"))];
  auto& db = grads[params.index_of(param_name(l, "b"))];
  Eigen::Map<MatX<Scalar>> dW(dw.data(), l.out_ch, Eigen::Index(l.in_ch) * l.kernel);
  dW.noalias() += dout.data * scratch.transpose();
  db += dout.data.rowwise().sum();

  const auto W = params.at(param_name(l, "w")).matrix(l.out_ch, Eigen::Index(l.in_ch) * l.kernel);
  MatX<Scalar> dM = W.transpose() * dout.data;

  din.count = in.count;
  din.len = in.len;
  din.data.setZero(in.channels(), in.data.cols());
  const Eigen::Index C = in.channels();
  for (int s = 0; s < in.count; ++s) {
    const Eigen::Index in_base = Eigen::Index(s) * in.len;
    const Eigen::Index col_base = Eigen::Index(s) * dout.len;
    for (Eigen::Index t = 0; t < dout.len; ++t) {
      const Eigen::Index col = col_base + t;
      for (int k = 0; k < l.kernel; ++k) {
        const Eigen::Index u = t * l.stride + Eigen::Index(k) * l.dilation - l.pad_left;
        if (u >= 0 && u < in.len)
          din.data.col(in_base + u) += dM.col(col).segment(Eigen::Index(k) * C, C);
      }
    }
  }
}

// Batch statistics are computed in double regardless of the working scalar;
// the values actually used to normalize are recorded in the cache so the
// backward pass sees exactly what the forward pass applied.
template <typename Scalar>
void batchnorm_forward(const LayerSpec& l, ParamStore<Scalar>& params, bool train_mode,
                       const Batch<Scalar>& in, Batch<Scalar>& out, LayerCache<Scalar>* cache) {
  out.count = in.count;
  out.len = in.len;
  VecX<Scalar> mean(l.channels), invstd(l.channels);
  if (train_mode) {
    const Eigen::Index M = in.data.cols();
    if (M < 1) throw std::invalid_argument("layer " + l.name + ": empty batch");
    // Two accumulation passes in double, walking columns so access stays
    // contiguous in the column-major batch.
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(l.channels);
    for (Eigen::Index j = 0; j < M; ++j)
      for (Eigen::Index c = 0; c < l.channels; ++c) mu(c) += double(in.data(c, j));
    mu /= double(M);
    Eigen::VectorXd var = Eigen::VectorXd::Zero(l.channels);
    for (Eigen::Index j = 0; j < M; ++j)
      for (Eigen::Index c = 0; c < l.channels; ++c) {
        const double d = double(in.data(c, j)) - mu(c);
        var(c) += d * d;
      }
    var /= double(M);
    mean = mu.cast<Scalar>();
    invstd = (var.array() + l.eps).rsqrt().cast<Scalar>();

    auto& rm = params.at(param_name(l, "running_mean")).values;
    auto& rv = params.at(param_name(l, "running_var")).values;
    const double unbias = M > 1 ? double(M) / double(M - 1) : 1.0;
    rm = ((1.0 - l.momentum) * rm.template cast<double>() + l.momentum * mu).template cast<Scalar>();
    rv = ((1.0 - l.momentum) * rv.template cast<double>() + l.momentum * unbias * var)
             .template cast<Scalar>();
  } else {
    const auto& rm = params.at(param_name(l, "running_mean")).values;
    const auto& rv = params.at(param_name(l, "running_var")).values;
    mean = rm;
    invstd = (rv.template cast<double>().array() + l.eps).rsqrt().template cast<Scalar>();
  }

  const auto& gamma = params.at(param_name(l, "gamma")).values;
  const auto& beta = params.at(param_name(l, "beta")).values;
  const VecX<Scalar> scale = gamma.cwiseProduct(invstd);
  out.data.noalias() = scale.asDiagonal() * (in.data.colwise() - mean);
  out.data.colwise() += beta;
  if (cache) {
    cache->bn_mean = std::move(mean);
    cache->bn_invstd = std::move(invstd);
  }
}

template <typename Scalar>
void batchnorm_backward(const LayerSpec& l, const ParamStore<Scalar>& params, bool train_mode,
                        const LayerCache<Scalar>& cache, const Batch<Scalar>& dout,
                        GradArrays<Scalar>& grads, Batch<Scalar>& din) {
  const Batch<Scalar>& in = cache.input;
  const Eigen::Index M = in.data.cols();
  const auto& gamma = params.at(param_name(l, "gamma")).values;
  auto& dgamma = grads[params.index_of(param_name(l, "gamma"))];
  auto& dbeta = grads[params.index_of(param_name(l, "beta"))];

  const MatX<Scalar> xc = in.data.colwise() - cache.bn_mean;
  // xhat = xc scaled by invstd, reconstructed rather than stored
  dgamma += dout.data.cwiseProduct(xc).rowwise().sum().cwiseProduct(cache.bn_invstd);
  dbeta += dout.data.rowwise().sum();

  din.count = in.count;
  din.len = in.len;
  const VecX<Scalar> g_scaled = gamma.cwiseProduct(cache.bn_invstd);
  if (!train_mode) {
    // Running statistics are constants here.
    din.data.noalias() = g_scaled.asDiagonal() * dout.data;
    return;
  }
  const MatX<Scalar> dxhat = gamma.asDiagonal() * dout.data;
  const VecX<Scalar> inv3 =
      cache.bn_invstd.array() * cache.bn_invstd.array() * cache.bn_invstd.array();
  const VecX<Scalar> dvar =
      (dxhat.cwiseProduct(xc).rowwise().sum()).cwiseProduct(inv3) * Scalar(-0.5);
  const VecX<Scalar> sum_dxhat = dxhat.rowwise().sum();
  const VecX<Scalar> sum_xc = xc.rowwise().sum();
  const VecX<Scalar> dmean = -cache.bn_invstd.cwiseProduct(sum_dxhat) -
                             dvar.cwiseProduct(sum_xc) * Scalar(2.0 / double(M));
  din.data.noalias() = cache.bn_invstd.asDiagonal() * dxhat;
  din.data.noalias() += (Scalar(2.0 / double(M)) * dvar).asDiagonal() * xc;
  din.data.colwise() += dmean * Scalar(1.0 / double(M));
}

template <typename Scalar>
void relu_forward(const Batch<Scalar>& in, Batch<Scalar>& out) {
  out.count = in.count;
  out.len = in.len;
  out.data = in.data.cwiseMax(Scalar(0));
}

template <typename Scalar>
void relu_backward(const LayerCache<Scalar>& cache, const Batch<Scalar>& dout,
                   Batch<Scalar>& din) {
  din.count = dout.count;
  din.len = dout.len;
  din.data = (cache.input.data.array() > Scalar(0))
                 .select(dout.data, MatX<Scalar>::Zero(dout.data.rows(), dout.data.cols()));
}

// Reduces each sample to length one per channel. Ties route to the earliest
// position so gradient placement is deterministic.
template <typename Scalar>
void global_max_pool_forward(const Batch<Scalar>& in, Batch<Scalar>& out,
                             LayerCache<Scalar>* cache) {
  const Eigen::Index C = in.channels();
  out.count = in.count;
  out.len = 1;
  out.data.resize(C, in.count);
  if (cache) cache->argmax.resize(C, in.count);
  for (int s = 0; s < in.count; ++s) {
    const auto block = in.sample(s);
    for (Eigen::Index c = 0; c < C; ++c) {
      Eigen::Index best = 0;
      Scalar bv = block(c, 0);
      for (Eigen::Index t = 1; t < in.len; ++t)
        if (block(c, t) > bv) {
          bv = block(c, t);
          best = t;
        }
      out.data(c, s) = bv;
      if (cache) cache->argmax(c, s) = best;
    }
  }
}

template <typename Scalar>
void global_max_pool_backward(const LayerCache<Scalar>& cache, const Batch<Scalar>& dout,
                              Batch<Scalar>& din) {
  const Batch<Scalar>& in = cache.input;
  din.count = in.count;
  din.len = in.len;
  din.data.setZero(in.channels(), in.data.cols());
  for (int s = 0; s < in.count; ++s)
    for (Eigen::Index c = 0; c < in.channels(); ++c)
      din.data(c, Eigen::Index(s) * in.len + cache.argmax(c, s)) += dout.data(c, s);
}

template <typename Scalar>
void dense_forward(const LayerSpec& l, const ParamStore<Scalar>& params,
                   const Batch<Scalar>& in, Batch<Scalar>& out) {
  if (in.len != 1)
    throw std::invalid_argument("layer " + l.name +
                                ": dense expects pooled input of length 1, got length " +
                                std::to_string(long(in.len)));
  const auto W = params.at(param_name(l, "w")).matrix(l.out, l.in);
  out.count = in.count;
  out.len = 1;
  out.data.noalias() = W * in.data;
  out.data.colwise() += params.at(param_name(l, "b")).values;
}

template <typename Scalar>
void dense_backward(const LayerSpec& l, const ParamStore<Scalar>& params,
                    const LayerCache<Scalar>& cache, const Batch<Scalar>& dout,
                    GradArrays<Scalar>& grads, Batch<Scalar>& din) {
  auto& dw = grads[params.index_of(param_name(l, "w"))];
  auto& db = grads[params.index_of(param_name(l, "b"))];
  Eigen::Map<MatX<Scalar>> dW(dw.data(), l.out, l.in);
  dW.noalias() += dout.data * cache.input.data.transpose();
  db += dout.data.rowwise().sum();
  const auto W = params.at(param_name(l, "w")).matrix(l.out, l.in);
  din.count = dout.count;
  din.len = 1;
  din.data.noalias() = W.transpose() * dout.data;
}

// Nearest-index resampling to any target length, shorter or longer; position
// t reads source index floor(t * len / target).
template <typename Scalar>
void upsample_forward(const LayerSpec& l, Eigen::Index runtime_target, const Batch<Scalar>& in,
                      Batch<Scalar>& out, LayerCache<Scalar>* cache) {
  const Eigen::Index T = l.target_len > 0 ? l.target_len : runtime_target;
  if (T < 1)
    throw std::invalid_argument("layer " + l.name + ": no target length provided");
  out.count = in.count;
  out.len = T;
  out.data.resize(in.channels(), Eigen::Index(in.count) * T);
  for (int s = 0; s < in.count; ++s) {
    const Eigen::Index in_base = Eigen::Index(s) * in.len;
    const Eigen::Index out_base = Eigen::Index(s) * T;
    for (Eigen::Index t = 0; t < T; ++t)
      out.data.col(out_base + t) = in.data.col(in_base + t * in.len / T);
  }
  if (cache) cache->out_len = T;
}

template <typename Scalar>
void upsample_backward(const LayerCache<Scalar>& cache, const Batch<Scalar>& dout,
                       Batch<Scalar>& din) {
  const Batch<Scalar>& in = cache.input;
  const Eigen::Index T = cache.out_len;
  din.count = in.count;
  din.len = in.len;
  din.data.setZero(in.channels(), in.data.cols());
  for (int s = 0; s < in.count; ++s) {
    const Eigen::Index in_base = Eigen::Index(s) * in.len;
    const Eigen::Index out_base = Eigen::Index(s) * T;
    for (Eigen::Index t = 0; t < T; ++t)
      din.data.col(in_base + t * in.len / T) += dout.data.col(out_base + t);
  }
}

}  // namespace dtwapprox
