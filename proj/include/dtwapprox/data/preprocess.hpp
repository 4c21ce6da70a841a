#pragma once

#include <filesystem>

#include "dtwapprox/time_series.hpp"

namespace dtwapprox {

// Robust range of a signal collection: clipping percentiles plus the value
// range that remains after clipping. Amplitude scaling reuses one stats
// object across splits so train and evaluation data share a single mapping.
struct PreprocessStats {
  double p1 = 0.0;   // 1st percentile of all pooled samples
  double p99 = 0.0;  // 99th percentile
  double lo = 0.0;   // minimum after clipping
  double hi = 0.0;   // maximum after clipping
};

// Pools every sample of every signal; percentiles use linear interpolation
// between order statistics.
PreprocessStats compute_stats(const Dataset& ds);

// Clamp all values into [p1, p99].
void clip(Dataset& ds, const PreprocessStats& stats);

// Affine map of [lo, hi] onto [0, 1]. A degenerate range maps to all zeros.
void minmax(Dataset& ds, const PreprocessStats& stats);

void save_stats(const std::filesystem::path& path, const PreprocessStats& stats);
PreprocessStats load_stats(const std::filesystem::path& path);

}  // namespace dtwapprox
