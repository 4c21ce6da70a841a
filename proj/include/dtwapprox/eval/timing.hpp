#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "dtwapprox/eval/metric_handle.hpp"
#include "dtwapprox/rng.hpp"

namespace dtwapprox {

// Wall-clock cost of repeated distance computations for one metric at one
// series length.
struct TimingCell {
  std::string metric;
  Eigen::Index length = 0;
  int reps = 0;
  double total_seconds = 0.0;
  std::vector<double> per_rep_seconds;  // raw data behind the total
};

struct TimingReport {
  std::vector<TimingCell> cells;  // length-major, metric order within a length
};

// Times `reps` distance computations on uniform random pairs per length.
// The same pairs are fed to every metric, warm-up runs are excluded, and
// everything executes serially on one worker so the numbers stay honest.
TimingReport timing_bench(const std::vector<MetricHandle>& metrics,
                          const std::vector<Eigen::Index>& lengths, int reps, const Rng& rng,
                          int warmup = 2);

// First cell matching the metric name and length; throws if absent.
const TimingCell& find_cell(const TimingReport& report, const std::string& metric,
                            Eigen::Index length);

nlohmann::json timing_to_json(const TimingReport& report);

// One row per cell: metric, length, reps, total and mean seconds.
std::string timing_csv(const TimingReport& report);

}  // namespace dtwapprox
