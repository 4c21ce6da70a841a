#pragma once

#include <array>
#include <cmath>

#include "dtwapprox/net/network.hpp"
#include "dtwapprox/time_series.hpp"

namespace dtwapprox {

// Input lengths the fixed-topology models accept.
inline constexpr int kMinInputLen = 256;
inline constexpr int kMaxInputLen = 3000;
// Length every stride-2 stack runs at after the first block's resample. The
// fixed internal length keeps per-pair inference nearly flat across input
// lengths; at the shortest admissible input it is an identity mapping.
inline constexpr int kTrunkLen = 128;

namespace detail {

struct ConvPlan {
  int out_ch, kernel, stride;
};

// Eight halving blocks: 128 -> 1 after the resample.
inline constexpr std::array<ConvPlan, 8> kTrunkPlan{{{8, 7, 2},
                                                     {16, 7, 2},
                                                     {32, 5, 2},
                                                     {64, 5, 2},
                                                     {128, 3, 2},
                                                     {128, 3, 2},
                                                     {256, 3, 2},
                                                     {256, 3, 2}}};

inline LayerSpec conv_same(const std::string& name, int in_ch, int out_ch, int kernel,
                           int stride, int dilation = 1) {
  LayerSpec l;
  l.kind = LayerKind::conv1d;
  l.name = name;
  l.in_ch = in_ch;
  l.out_ch = out_ch;
  l.kernel = kernel;
  l.stride = stride;
  l.dilation = dilation;
  const int span = (kernel - 1) * dilation;  // total padding for same-style output
  l.pad_left = span / 2;
  l.pad_right = span - span / 2;
  return l;
}

inline LayerSpec bn(const std::string& name, int channels) {
  LayerSpec l;
  l.kind = LayerKind::batchnorm1d;
  l.name = name;
  l.channels = channels;
  return l;
}

inline LayerSpec relu(const std::string& name) {
  LayerSpec l;
  l.kind = LayerKind::relu;
  l.name = name;
  return l;
}

inline LayerSpec dense(const std::string& name, int in, int out) {
  LayerSpec l;
  l.kind = LayerKind::dense;
  l.name = name;
  l.in = in;
  l.out = out;
  return l;
}

inline LayerSpec upsample(const std::string& name, int target_len) {
  LayerSpec l;
  l.kind = LayerKind::upsample_nearest;
  l.name = name;
  l.target_len = target_len;
  return l;
}

// Shared conv/bn/relu stack of the embedding and pair-scoring models.
inline void append_trunk(NetworkSpec& spec, const std::string& prefix, int in_ch) {
  int ch = in_ch;
  for (std::size_t b = 0; b < kTrunkPlan.size(); ++b) {
    const ConvPlan& p = kTrunkPlan[b];
    const std::string idx = std::to_string(b + 1);
    spec.layers.push_back(conv_same(prefix + "_conv" + idx, ch, p.out_ch, p.kernel, p.stride));
    spec.layers.push_back(bn(prefix + "_bn" + idx, p.out_ch));
    spec.layers.push_back(relu(prefix + "_relu" + idx));
    if (b == 0) spec.layers.push_back(upsample(prefix + "_resample", kTrunkLen));
    ch = p.out_ch;
  }
  LayerSpec pool;
  pool.kind = LayerKind::global_max_pool;
  pool.name = prefix + "_pool";
  spec.layers.push_back(pool);
}

}  // namespace detail

// Embedding model: conv/bn/relu trunk, global max pool, linear head to the
// embedding dimension. Accepts any single-channel input in the admissible
// length range.
inline NetworkSpec build_encoder(int embed_dim) {
  if (embed_dim < 1) throw std::invalid_argument("build_encoder: embed_dim must be positive");
  NetworkSpec spec;
  spec.name = "encoder";
  spec.in_channels = 1;
  spec.min_len = kMinInputLen;
  spec.max_len = kMaxInputLen;
  detail::append_trunk(spec, "enc", 1);
  spec.layers.push_back(detail::dense("enc_head", detail::kTrunkPlan.back().out_ch, embed_dim));
  return spec;
}

// Reconstruction model: treats the embedding as a length-H sequence,
// resamples it to the requested output length at call time, then refines
// through dilated convolutions. No normalization layers here.
inline NetworkSpec build_decoder(int embed_dim, int kernel = 20,
                                 std::vector<int> dilations = {32, 16, 8, 4, 2, 1}) {
  if (embed_dim < 1) throw std::invalid_argument("build_decoder: embed_dim must be positive");
  if (kernel < 1) throw std::invalid_argument("build_decoder: kernel must be positive");
  if (dilations.empty()) throw std::invalid_argument("build_decoder: need at least one stage");
  NetworkSpec spec;
  spec.name = "decoder";
  spec.in_channels = 1;
  spec.min_len = 1;
  spec.layers.push_back(detail::upsample("dec_up", 0));  // target supplied per call
  int ch = 1;
  for (std::size_t i = 0; i < dilations.size(); ++i) {
    const std::string idx = std::to_string(i + 1);
    spec.layers.push_back(
        detail::conv_same("dec_conv" + idx, ch, 16, kernel, 1, dilations[i]));
    spec.layers.push_back(detail::relu("dec_relu" + idx));
    ch = 16;
  }
  spec.layers.push_back(detail::conv_same("dec_head", ch, 1, 1, 1));
  return spec;
}

// Pair-scoring model: both series stacked as two channels, the shared trunk,
// then a two-layer head producing one value.
inline NetworkSpec build_direct(int embed_dim) {
  if (embed_dim < 1) throw std::invalid_argument("build_direct: embed_dim must be positive");
  NetworkSpec spec;
  spec.name = "direct";
  spec.in_channels = 2;
  spec.min_len = kMinInputLen;
  spec.max_len = kMaxInputLen;
  LayerSpec stack;
  stack.kind = LayerKind::concat_channels;
  stack.name = "dir_in";
  stack.channels = 2;
  spec.layers.push_back(stack);
  detail::append_trunk(spec, "dir", 2);
  spec.layers.push_back(detail::dense("dir_fc1", detail::kTrunkPlan.back().out_ch, embed_dim));
  spec.layers.push_back(detail::bn("dir_fc1_bn", embed_dim));
  spec.layers.push_back(detail::relu("dir_fc1_relu"));
  spec.layers.push_back(detail::dense("dir_out", embed_dim, 1));
  return spec;
}

// --- batch construction helpers -------------------------------------------

template <typename Scalar>
Batch<Scalar> single_batch(const Eigen::VectorXf& values) {
  Batch<Scalar> b;
  b.count = 1;
  b.len = values.size();
  b.data = values.transpose().template cast<Scalar>();
  return b;
}

// Two series stacked as channels; both are zero-padded on the right to the
// target length (default: the longer of the two).
template <typename Scalar>
Batch<Scalar> pair_input(const Eigen::VectorXf& x, const Eigen::VectorXf& y,
                         Eigen::Index target_len = 0) {
  const Eigen::Index T = target_len > 0 ? target_len : std::max(x.size(), y.size());
  if (x.size() > T || y.size() > T)
    throw std::invalid_argument("pair_input: series longer than the target length");
  Batch<Scalar> b;
  b.count = 1;
  b.len = T;
  b.data.setZero(2, T);
  b.data.row(0).head(x.size()) = x.transpose().template cast<Scalar>();
  b.data.row(1).head(y.size()) = y.transpose().template cast<Scalar>();
  return b;
}

// Embedding of one series, inference mode.
template <typename Scalar>
VecX<Scalar> embed(const NetworkSpec& encoder, const ParamStore<Scalar>& params,
                   const Eigen::VectorXf& values) {
  return forward(encoder, params, single_batch<Scalar>(values)).data.col(0);
}

// Euclidean distance between the two embeddings; the model's distance output.
template <typename Scalar>
double siamese_distance(const NetworkSpec& encoder, const ParamStore<Scalar>& params,
                        const Eigen::VectorXf& x, const Eigen::VectorXf& y) {
  Batch<Scalar> b;
  b.count = 2;
  b.len = std::max(x.size(), y.size());
  if (x.size() != y.size()) {
    // Encode separately; the trunk accepts each length on its own.
    const VecX<Scalar> ex = embed(encoder, params, x);
    const VecX<Scalar> ey = embed(encoder, params, y);
    return (ex.template cast<double>() - ey.template cast<double>()).norm();
  }
  b.data.resize(1, 2 * b.len);
  b.data.row(0).head(b.len) = x.transpose().template cast<Scalar>();
  b.data.row(0).tail(b.len) = y.transpose().template cast<Scalar>();
  Batch<Scalar> z = forward(encoder, params, std::move(b));
  return (z.data.col(0).template cast<double>() - z.data.col(1).template cast<double>()).norm();
}

// Scalar score of the pair model; optionally averaged over both input orders.
template <typename Scalar>
double direct_predict(const NetworkSpec& direct, const ParamStore<Scalar>& params,
                      const Eigen::VectorXf& x, const Eigen::VectorXf& y,
                      bool symmetrize = false) {
  const double fxy =
      double(forward(direct, params, pair_input<Scalar>(x, y)).data(0, 0));
  if (!symmetrize) return fxy;
  const double fyx =
      double(forward(direct, params, pair_input<Scalar>(y, x)).data(0, 0));
  return 0.5 * (fxy + fyx);
}

}  // namespace dtwapprox
