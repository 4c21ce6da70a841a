#include "dtwapprox/net/spec.hpp"

#include <json.hpp>

namespace dtwapprox {

using nlohmann::json;

const char* to_string(LayerKind k) {
  switch (k) {
    case LayerKind::conv1d: return "conv1d";
    case LayerKind::batchnorm1d: return "batchnorm1d";
    case LayerKind::relu: return "relu";
    case LayerKind::global_max_pool: return "global_max_pool";
    case LayerKind::dense: return "dense";
    case LayerKind::upsample_nearest: return "upsample_nearest";
    default: return "concat_channels";
  }
}

LayerKind layer_kind_from_string(const std::string& s) {
  if (s == "conv1d") return LayerKind::conv1d;
  if (s == "batchnorm1d") return LayerKind::batchnorm1d;
  if (s == "relu") return LayerKind::relu;
  if (s == "global_max_pool") return LayerKind::global_max_pool;
  if (s == "dense") return LayerKind::dense;
  if (s == "upsample_nearest") return LayerKind::upsample_nearest;
  if (s == "concat_channels") return LayerKind::concat_channels;
  throw std::invalid_argument("unknown layer kind: " + s);
}

std::string spec_to_json(const NetworkSpec& spec) {
  json layers = json::array();
  for (const LayerSpec& l : spec.layers) {
    layers.push_back(json{{"kind", to_string(l.kind)},
                          {"name", l.name},
                          {"in_ch", l.in_ch},
                          {"out_ch", l.out_ch},
                          {"kernel", l.kernel},
                          {"stride", l.stride},
                          {"dilation", l.dilation},
                          {"pad_left", l.pad_left},
                          {"pad_right", l.pad_right},
                          {"channels", l.channels},
                          {"eps", l.eps},
                          {"momentum", l.momentum},
                          {"in", l.in},
                          {"out", l.out},
                          {"target_len", l.target_len}});
  }
  json j{{"name", spec.name},
         {"in_channels", spec.in_channels},
         {"min_len", spec.min_len},
         {"max_len", spec.max_len},
         {"layers", layers}};
  return j.dump();
}

NetworkSpec spec_from_json(const std::string& text) {
  const json j = json::parse(text);
  NetworkSpec spec;
  spec.name = j.at("name").get<std::string>();
  spec.in_channels = j.at("in_channels").get<int>();
  spec.min_len = j.at("min_len").get<int>();
  spec.max_len = j.at("max_len").get<int>();
  for (const json& lj : j.at("layers")) {
    LayerSpec l;
    l.kind = layer_kind_from_string(lj.at("kind").get<std::string>());
    l.name = lj.at("name").get<std::string>();
    l.in_ch = lj.at("in_ch").get<int>();
    l.out_ch = lj.at("out_ch").get<int>();
    l.kernel = lj.at("kernel").get<int>();
    l.stride = lj.at("stride").get<int>();
    l.dilation = lj.at("dilation").get<int>();
    l.pad_left = lj.at("pad_left").get<int>();
    l.pad_right = lj.at("pad_right").get<int>();
    l.channels = lj.at("channels").get<int>();
    l.eps = lj.at("eps").get<double>();
    l.momentum = lj.at("momentum").get<double>();
    l.in = lj.at("in").get<int>();
    l.out = lj.at("out").get<int>();
    l.target_len = lj.at("target_len").get<int>();
    spec.layers.push_back(std::move(l));
  }
  return spec;
}

}  // namespace dtwapprox
