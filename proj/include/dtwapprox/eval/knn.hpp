#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "dtwapprox/eval/metric_handle.hpp"
#include "dtwapprox/rng.hpp"

namespace dtwapprox {

// One fit/score pass of a k-nearest-neighbour classifier on an explicit
// train/test split.
struct KnnSplitScore {
  double macro_f1 = 0.0;
  std::vector<int> class_ids;    // ascending union over train and test
  std::vector<double> class_f1;  // aligned with class_ids; absent classes score 0
  std::vector<std::string> warnings;
};

// Majority vote over the k nearest train signals; vote ties break toward the
// class with the smallest mean distance among its voters, then the lowest
// class id. Macro-F1 is the unweighted mean of per-class F1 over class_ids.
KnnSplitScore knn_eval_split(const MetricHandle& metric, const std::vector<TimeSeries>& train,
                             const std::vector<TimeSeries>& test, int k = 1,
                             unsigned workers = 0);

struct ClassifReport {
  std::string metric;
  int k = 1;
  std::vector<int> class_ids;  // ascending union over the whole pool
  std::vector<double> per_rep_macro_f1;
  std::vector<std::vector<double>> per_rep_class_f1;  // [rep][class position]
  double mean_macro_f1 = 0.0;
  double stddev_macro_f1 = 0.0;  // population standard deviation
  std::vector<std::string> warnings;
};

// Repetition protocol: pool the given signals, re-split 50/50 at random per
// repetition (seeded via rng.fork(rep)), fit on one half, score the other.
// All pool distances are computed once and reused across repetitions.
ClassifReport knn_macro_f1(const MetricHandle& metric,
                           const std::vector<TimeSeries>& train_signals,
                           const std::vector<TimeSeries>& test_signals, int k, int reps,
                           const Rng& rng, unsigned workers = 0);

nlohmann::json knn_to_json(const ClassifReport& report);

// One row per report: metric, k, reps, mean and deviation of the macro-F1.
std::string knn_csv(const std::vector<ClassifReport>& reports);

}  // namespace dtwapprox
