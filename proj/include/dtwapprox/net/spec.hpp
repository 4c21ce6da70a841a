#pragma once

#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace dtwapprox {

enum class LayerKind {
  conv1d,
  batchnorm1d,
  relu,
  global_max_pool,
  dense,
  upsample_nearest,
  concat_channels,
};

const char* to_string(LayerKind k);
LayerKind layer_kind_from_string(const std::string& s);

// Declarative description of one layer. Only the fields for the layer's kind
// are meaningful; the rest stay at their defaults.
struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  std::string name;

  // conv1d
  int in_ch = 0, out_ch = 0;
  int kernel = 0, stride = 1, dilation = 1;
  int pad_left = 0, pad_right = 0;

  // batchnorm1d / concat_channels
  int channels = 0;
  double eps = 1e-5;
  double momentum = 0.1;

  // dense
  int in = 0, out = 0;

  // upsample_nearest; 0 means the target is supplied per call
  int target_len = 0;
};

// A whole network: an ordered layer list plus its input contract.
struct NetworkSpec {
  std::string name;
  int in_channels = 1;
  int min_len = 1;
  int max_len = std::numeric_limits<int>::max();
  std::vector<LayerSpec> layers;
};

// JSON text round trip; layout is stable so equal specs serialize to equal
// bytes.
std::string spec_to_json(const NetworkSpec& spec);
NetworkSpec spec_from_json(const std::string& text);

inline std::string param_name(const LayerSpec& layer, const char* suffix) {
  return layer.name + "." + suffix;
}

}  // namespace dtwapprox
