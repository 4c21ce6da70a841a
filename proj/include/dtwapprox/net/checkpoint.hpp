#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "dtwapprox/net/adam.hpp"
#include "dtwapprox/net/params.hpp"
#include "dtwapprox/net/spec.hpp"

namespace dtwapprox {

// One named model with its parameters and optimizer state. A training run
// holds one section per network it updates jointly.
struct ModelSection {
  std::string name;
  NetworkSpec spec;
  ParamStore<float> params;
  AdamState<float> adam;
};

// Self-describing training artifact: structured specs, raw f32 parameter and
// moment payloads, optimizer state, and an echo of the configuration that
// produced it. Save/load round-trips bit for bit.
struct Checkpoint {
  static constexpr std::uint32_t kFormatVersion = 1;

  std::string kind;  // which training recipe wrote it: "siamese" or "direct"
  std::vector<ModelSection> sections;
  std::map<std::string, std::string> config_echo;
  double best_val_loss = 0.0;

  ModelSection& section(const std::string& name);
  const ModelSection& section(const std::string& name) const;
  bool has_section(const std::string& name) const;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Fingerprint of every parameter payload in order; changes iff some value does.
std::uint64_t checkpoint_param_hash(const Checkpoint& ckpt);

}  // namespace dtwapprox
