#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "dtwapprox/time_series.hpp"

namespace dtwapprox {

// Configuration for the synthetic corpus generator. Classes are separated by
// disjoint frequency bands; subjects group consecutive recordings so splits
// can stay subject-disjoint; occasional spikes give the clipping stage real
// work.
struct SynthConfig {
  int n_classes = 3;
  int signals_per_class = 100;
  // When positive, overrides signals_per_class with an exact total, assigning
  // classes round robin.
  std::uint64_t total_signals = 0;

  Eigen::Index min_len = 300;
  Eigen::Index max_len = 420;
  double sample_rate = 100.0;

  // Per-class frequency bands in Hz; generated geometrically when empty.
  std::vector<std::pair<double, double>> class_bands;
  int waves_per_signal = 3;
  double noise_level = 0.05;    // innovation scale of the smooth noise
  double outlier_rate = 0.002;  // per-sample spike probability
  int signals_per_subject = 10;
  double train_frac = 0.6;
  double val_frac = 0.15;  // remainder is the held-out test split
  std::uint64_t seed = 0;

  void validate() const;
};

// Deterministic synthetic corpus: same config, same bytes.
Dataset synth_gen(const SynthConfig& cfg);

}  // namespace dtwapprox
