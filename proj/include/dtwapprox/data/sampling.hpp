#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "dtwapprox/rng.hpp"
#include "dtwapprox/time_series.hpp"

namespace dtwapprox {

// Random contiguous window of exactly `target_len` samples. Identity except
// a shared window position draw when the signal is already that long.
TimeSeries slice_fixed(const TimeSeries& s, Eigen::Index target_len, Rng& rng);

// Slice every signal of the dataset to one fixed length, keeping labels,
// subjects and split tags. Throws if any signal is shorter than the target.
Dataset slice_fixed(const Dataset& ds, Eigen::Index target_len, Rng& rng);

// Slice every signal to its own uniformly drawn length in [len_min, len_max].
Dataset sample_lengths(const Dataset& ds, Eigen::Index len_min, Eigen::Index len_max, Rng& rng);

// n_pairs distinct ordered pairs drawn uniformly from the n_signals^2 grid
// (self-pairs included), reported in a deterministic draw order.
std::vector<std::pair<std::uint32_t, std::uint32_t>> sample_pairs(std::uint64_t n_signals,
                                                                  std::uint64_t n_pairs,
                                                                  Rng& rng);

// Pairs whose endpoints both carry the given split tag, with global indices.
std::vector<std::pair<std::uint32_t, std::uint32_t>> sample_split_pairs(const Dataset& ds,
                                                                        Split split,
                                                                        std::uint64_t n_pairs,
                                                                        Rng& rng);

}  // namespace dtwapprox
