#pragma once

#include <Eigen/Core>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "dtwapprox/metrics/cost.hpp"
#include "dtwapprox/net/checkpoint.hpp"
#include "dtwapprox/time_series.hpp"

namespace dtwapprox {

// Knobs shared by every resolvable metric; each kind reads the ones it needs.
struct MetricOptions {
  int radius = 1;        // corridor radius of the multiscale approximation
  double gamma = 0.1;    // smoothing of the soft alignment cost
  CostKind cost = CostKind::absolute;
  bool normalize = true;    // divide alignment costs by max(len_x, len_y)
  bool symmetrize = false;  // average the pair model over both input orders
};

// A named pair-distance over time series. `distance` is always callable and
// thread-safe. `batch_embed` is set only for embedding models so harnesses
// can cache one embedding per signal instead of re-encoding it per pair;
// distances between embeddings are plain Euclidean norms.
struct MetricHandle {
  std::string name;
  bool symmetric = true;
  std::function<double(const TimeSeries&, const TimeSeries&)> distance;
  std::function<Eigen::MatrixXf(const std::vector<TimeSeries>&)> batch_embed;
  std::shared_ptr<const Checkpoint> model;  // keeps model storage alive
};

MetricHandle make_exact_dtw(const MetricOptions& opt = {});
MetricHandle make_fast_dtw(const MetricOptions& opt = {});
MetricHandle make_soft_dtw(const MetricOptions& opt = {});

// Model-backed metrics. The checkpoint must hold the matching section
// ("encoder" for the embedding model, "direct" for the pair model).
MetricHandle make_siamese_metric(std::shared_ptr<const Checkpoint> ckpt,
                                 const MetricOptions& opt = {});
MetricHandle make_direct_metric(std::shared_ptr<const Checkpoint> ckpt,
                                const MetricOptions& opt = {});

// Arbitrary user-supplied distance; used by tests and available to callers.
MetricHandle make_custom_metric(std::string name,
                                std::function<double(const TimeSeries&, const TimeSeries&)> fn,
                                bool symmetric = true);

// Textual form: "exact_dtw", "fast_dtw", "soft_dtw", "siamese@file",
// "direct@file" ("model_" prefixes accepted). Model kinds require the @file
// part, which is loaded as a checkpoint.
MetricHandle resolve_metric(const std::string& spec, const MetricOptions& opt = {});

// Pairwise distances with a zero diagonal, parallel across pairs. Symmetric
// handles compute each unordered pair once and mirror it; asymmetric ones
// fill both directions (row index = first argument).
Eigen::MatrixXd distance_matrix(const MetricHandle& metric,
                                const std::vector<TimeSeries>& signals, unsigned workers = 0);

// Rectangular fill: result(r, c) = distance(rows[r], cols[c]).
Eigen::MatrixXd cross_distance_matrix(const MetricHandle& metric,
                                      const std::vector<TimeSeries>& rows,
                                      const std::vector<TimeSeries>& cols, unsigned workers = 0);

}  // namespace dtwapprox
