#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "dtwapprox/metrics/cost.hpp"
#include "dtwapprox/time_series.hpp"

namespace dtwapprox {

// Precomputed target distances for signal index pairs. Values are stored as
// f32, matching the on-disk formats exactly.
struct PairGroundTruth {
  struct Entry {
    std::uint32_t a = 0, b = 0;
    float value = 0.0f;
  };
  std::vector<Entry> entries;
};

// Length-normalized alignment cost: raw / max(len_x, len_y). With inputs in
// [0, 1] and the absolute cost this lands in [0, 1].
double normalize_dtw(double raw, Eigen::Index len_x, Eigen::Index len_y);

// Exact alignment cost for every requested pair, parallelized over pairs.
// Entry order follows the input order regardless of worker count.
PairGroundTruth build_ground_truth(const std::vector<TimeSeries>& signals,
                                   const std::vector<std::pair<std::uint32_t, std::uint32_t>>& pairs,
                                   bool normalize = true,
                                   CostKind kind = CostKind::absolute,
                                   unsigned workers = 0);

// CSV: header "i,j,value", one entry per row, values printed so that the f32
// round-trips exactly. Binary: little-endian packed u32,u32,f32 records.
void save_ground_truth_csv(const std::filesystem::path& path, const PairGroundTruth& gt);
PairGroundTruth load_ground_truth_csv(const std::filesystem::path& path);
void save_ground_truth_bin(const std::filesystem::path& path, const PairGroundTruth& gt);
PairGroundTruth load_ground_truth_bin(const std::filesystem::path& path);

// Dispatch on extension: ".csv" text, anything else binary.
void save_ground_truth(const std::filesystem::path& path, const PairGroundTruth& gt);
PairGroundTruth load_ground_truth(const std::filesystem::path& path);

}  // namespace dtwapprox
