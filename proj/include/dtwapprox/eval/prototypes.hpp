#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "dtwapprox/eval/metric_handle.hpp"
#include "dtwapprox/rng.hpp"

namespace dtwapprox {

// One learnable series per class; all prototypes share a length.
struct PrototypeSet {
  std::vector<int> class_ids;           // ascending
  std::vector<Eigen::VectorXf> values;  // aligned with class_ids

  std::size_t size() const { return values.size(); }
  Eigen::Index length() const { return values.empty() ? 0 : values.front().size(); }
};

struct PrototypeConfig {
  long epochs = 30;
  double lr = 1e-3;       // optimizer step size on the prototype values
  double beta = 0.1;      // weight of the prototype-separation bonus
  long batch_size = 64;
  int init_members = 10;  // class members averaged into the initial prototype
};

struct PrototypeReport {
  std::vector<double> val_accuracy;  // entry 0: mean-initialized baseline
  std::vector<double> train_loss;    // one entry per trained epoch
  std::uint64_t model_hash_before = 0;
  std::uint64_t model_hash_after = 0;  // must equal model_hash_before
};

struct PrototypeResult {
  PrototypeSet prototypes;
  PrototypeReport report;
};

// Learns one prototype per class against a frozen model metric. The loss per
// batch is the cross-entropy of a softmax over negative model distances to
// each prototype, minus beta times the mean pairwise prototype distance;
// gradients reach the prototype values through the network's input
// gradients, and only those values are updated. Accuracy of
// nearest-prototype classification on the val split is recorded per epoch.
PrototypeResult train_prototypes(const MetricHandle& metric, const Dataset& ds,
                                 const PrototypeConfig& cfg, const Rng& rng);

// Loss of one batch plus, optionally, the gradient on each prototype.
// batch_class_index holds positions into protos.class_ids.
double prototype_loss_and_grad(const MetricHandle& metric, const PrototypeSet& protos,
                               const std::vector<const TimeSeries*>& batch,
                               const std::vector<int>& batch_class_index, double beta,
                               std::vector<Eigen::VectorXf>* grads);

// Class of the nearest prototype; distance ties break toward the lower id.
int classify_by_prototype(const PrototypeSet& protos, const MetricHandle& metric,
                          const TimeSeries& x);

nlohmann::json prototypes_to_json(const PrototypeResult& result);

// One row per epoch: epoch, train loss (empty on the baseline row), accuracy.
std::string prototype_csv(const PrototypeReport& report);

}  // namespace dtwapprox
