#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "dtwapprox/net/layers.hpp"
#include "dtwapprox/net/params.hpp"
#include "dtwapprox/net/spec.hpp"

namespace dtwapprox {

enum class Mode { train, infer };

// Everything backward needs: per-layer inputs and statistics, plus the store
// version the pass was computed against.
template <typename Scalar>
struct ForwardCache {
  Mode mode = Mode::train;
  std::uint64_t params_version = 0;
  Eigen::Index runtime_upsample = 0;
  std::vector<LayerCache<Scalar>> layers;
};

// Runs the network over one rectangular batch. Train mode normalizes with
// batch statistics and refreshes running ones (the single mutation, hence the
// non-const store); infer mode reads running statistics only. Passing a cache
// records what backward() will need; `runtime_upsample` feeds resampling
// layers whose target is chosen per call.
template <typename Scalar>
Batch<Scalar> forward(const NetworkSpec& spec, ParamStore<Scalar>& params, Batch<Scalar> x,
                      Mode mode = Mode::infer, ForwardCache<Scalar>* cache = nullptr,
                      Eigen::Index runtime_upsample = 0) {
  if (x.channels() != spec.in_channels)
    throw std::invalid_argument("network " + spec.name + ": expected " +
                                std::to_string(spec.in_channels) + " input channels, got " +
                                std::to_string(long(x.channels())));
  if (x.len < spec.min_len || x.len > spec.max_len)
    throw std::invalid_argument("network " + spec.name + ": input length " +
                                std::to_string(long(x.len)) + " outside admissible range [" +
                                std::to_string(spec.min_len) + ", " +
                                std::to_string(spec.max_len) + "]");
  if (x.count < 1) throw std::invalid_argument("network " + spec.name + ": empty batch");

  if (cache) {
    cache->mode = mode;
    cache->runtime_upsample = runtime_upsample;
    cache->layers.assign(spec.layers.size(), {});
  }

  MatX<Scalar> scratch;
  Batch<Scalar> cur = std::move(x);
  for (std::size_t li = 0; li < spec.layers.size(); ++li) {
    const LayerSpec& l = spec.layers[li];
    LayerCache<Scalar>* lc = cache ? &cache->layers[li] : nullptr;
    Batch<Scalar> next;
    switch (l.kind) {
      case LayerKind::conv1d:
        if (cur.channels() != l.in_ch)
          throw std::invalid_argument("layer " + l.name + ": channel mismatch");
        conv1d_forward(l, params, cur, next, scratch);
        break;
      case LayerKind::batchnorm1d:
        if (cur.channels() != l.channels)
          throw std::invalid_argument("layer " + l.name + ": channel mismatch");
        batchnorm_forward(l, params, mode == Mode::train, cur, next, lc);
        break;
      case LayerKind::relu:
        relu_forward(cur, next);
        break;
      case LayerKind::global_max_pool:
        global_max_pool_forward(cur, next, lc);
        break;
      case LayerKind::dense:
        if (cur.channels() != l.in)
          throw std::invalid_argument("layer " + l.name + ": channel mismatch");
        dense_forward(l, params, cur, next);
        break;
      case LayerKind::upsample_nearest:
        upsample_forward(l, runtime_upsample, cur, next, lc);
        break;
      case LayerKind::concat_channels:
        if (cur.channels() != l.channels)
          throw std::invalid_argument("layer " + l.name + ": expected " +
                                      std::to_string(l.channels) + " stacked channels");
        next = cur;
        break;
    }
    if (lc) lc->input = std::move(cur);
    cur = std::move(next);
  }
  if (cache) cache->params_version = params.version();
  return cur;
}

// Inference-only entry for const stores. Running statistics are not touched
// in infer mode, so the cast is observationally safe.
template <typename Scalar>
Batch<Scalar> forward(const NetworkSpec& spec, const ParamStore<Scalar>& params, Batch<Scalar> x,
                      ForwardCache<Scalar>* cache = nullptr, Eigen::Index runtime_upsample = 0) {
  return forward(spec, const_cast<ParamStore<Scalar>&>(params), std::move(x), Mode::infer, cache,
                 runtime_upsample);
}

template <typename Scalar>
struct BackwardResult {
  GradArrays<Scalar> grads;
  Batch<Scalar> input_grad;
};

// Reverse pass over a cached forward. Gradients accumulate into fresh zeroed
// buffers; the cache must match the store's current version.
template <typename Scalar>
BackwardResult<Scalar> backward(const NetworkSpec& spec, const ParamStore<Scalar>& params,
                                const ForwardCache<Scalar>& cache, Batch<Scalar> dout) {
  if (cache.params_version != params.version())
    throw std::runtime_error("network " + spec.name +
                             ": gradient cache is stale, parameters changed since forward");
  if (cache.layers.size() != spec.layers.size())
    throw std::runtime_error("network " + spec.name + ": cache does not match specification");

  BackwardResult<Scalar> out;
  out.grads = zero_grads(params);
  MatX<Scalar> scratch;
  Batch<Scalar> cur = std::move(dout);
  for (std::size_t li = spec.layers.size(); li-- > 0;) {
    const LayerSpec& l = spec.layers[li];
    const LayerCache<Scalar>& lc = cache.layers[li];
    Batch<Scalar> prev;
    switch (l.kind) {
      case LayerKind::conv1d:
        conv1d_backward(l, params, lc, cur, out.grads, prev, scratch);
        break;
      case LayerKind::batchnorm1d:
        batchnorm_backward(l, params, cache.mode == Mode::train, lc, cur, out.grads, prev);
        break;
      case LayerKind::relu:
        relu_backward(lc, cur, prev);
        break;
      case LayerKind::global_max_pool:
        global_max_pool_backward(lc, cur, prev);
        break;
      case LayerKind::dense:
        dense_backward(l, params, lc, cur, out.grads, prev);
        break;
      case LayerKind::upsample_nearest:
        upsample_backward(lc, cur, prev);
        break;
      case LayerKind::concat_channels:
        prev = std::move(cur);
        break;
    }
    cur = std::move(prev);
  }
  out.input_grad = std::move(cur);
  return out;
}

}  // namespace dtwapprox
