#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace dtwapprox {

// Flat training configuration. The on-disk form is structured text with one
// key=value per line ('#' starts a comment); command-line flags override file
// values through apply_override. Defaults are the full-scale settings; desk
// runs shrink them explicitly.
struct TrainConfig {
  std::string model_kind = "siamese";  // "siamese" or "direct"

  long L = 1000;         // slice length
  long H = 500;          // embedding size
  long batch_size = 128; // pairs per mini-batch
  double lambda = 1.0;   // reconstruction weight in the siamese objective
  double lr = 1e-5;
  long max_epochs = 50;
  long patience = 8;     // epochs without validation improvement before stopping
  std::uint64_t seed = 0;

  // Corpus-shaping counts, echoed into artifacts and consumed by the data and
  // ground-truth stages: signals and sampled pairs per split.
  long n_signals = 10000;
  std::uint64_t n_pairs = 1000000;
  long n_signals_val = 1000;
  std::uint64_t n_pairs_val = 100000;
  long n_signals_test = 1000;
  std::uint64_t n_pairs_test = 1000;

  void validate() const;
  std::map<std::string, std::string> to_map() const;
};

// Parses key=value text; unknown keys and malformed numbers are hard errors.
TrainConfig parse_train_config(const std::string& text);
TrainConfig load_train_config(const std::filesystem::path& path);

// Sets one field by its config-file key (used for flag overrides).
void apply_override(TrainConfig& cfg, const std::string& key, const std::string& value);

}  // namespace dtwapprox
