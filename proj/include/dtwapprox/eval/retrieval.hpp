#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "dtwapprox/eval/metric_handle.hpp"
#include "dtwapprox/rng.hpp"

namespace dtwapprox {

// Agreement between a metric's nearest neighbour and a reference metric's
// top-k neighbourhood, repeated over random subsets.
struct RetrievalReport {
  std::string metric;
  std::string reference;
  std::size_t n_t = 0;
  int top_k = 5;
  std::vector<double> per_rep_pct;  // one agreement percentage per repetition
  double mean_pct = 0.0;
  double stddev_pct = 0.0;  // population standard deviation across repetitions
};

// Per repetition: sample n_t distinct signals, find each one's nearest
// distinct neighbour under `metric`, and score the fraction whose neighbour
// lies in the reference's top_k distinct neighbours. The query is excluded
// from both sides; distance ties break toward the lower index.
RetrievalReport nn_retrieval_agreement(const MetricHandle& metric, const MetricHandle& reference,
                                       const std::vector<TimeSeries>& signals, std::size_t n_t,
                                       int top_k, int reps, const Rng& rng, unsigned workers = 0);

nlohmann::json retrieval_to_json(const RetrievalReport& report);

// One row per report: metric, reference, n_t, top_k, reps, mean, stddev.
std::string retrieval_csv(const std::vector<RetrievalReport>& reports);

}  // namespace dtwapprox
