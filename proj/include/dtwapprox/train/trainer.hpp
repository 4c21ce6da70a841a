#pragma once

#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "dtwapprox/metrics/ground_truth.hpp"
#include "dtwapprox/net/checkpoint.hpp"
#include "dtwapprox/time_series.hpp"
#include "dtwapprox/train/config.hpp"

namespace dtwapprox {

// Loss components of one epoch; total = approx + lambda * recon exactly.
struct EpochLosses {
  double approx = 0.0;
  double recon = 0.0;
  double total = 0.0;
};

struct EpochRow {
  long epoch = 0;
  std::optional<EpochLosses> train;  // absent for the pre-training baseline row
  EpochLosses val;
};

struct TrainReport {
  std::string model_kind;
  std::vector<EpochRow> epochs;  // row 0 is validation before any update
  long best_epoch = 0;
  double best_val_loss = 0.0;
  double wall_seconds = 0.0;
  std::size_t n_train_pairs = 0;
  std::size_t n_val_pairs = 0;
};

struct TrainResult {
  Checkpoint checkpoint;  // parameters of the best validation epoch
  TrainReport report;
};

// Both trainers consume a preprocessed dataset plus precomputed normalized
// ground truth whose indices refer to it. Pairs lying inside the train split
// are trained on; pairs inside the val split drive early stopping.
TrainResult train_siamese(const TrainConfig& cfg, const Dataset& ds, const PairGroundTruth& gt);
TrainResult train_direct(const TrainConfig& cfg, const Dataset& ds, const PairGroundTruth& gt);
TrainResult train_model(const TrainConfig& cfg, const Dataset& ds, const PairGroundTruth& gt);

struct ValLosses {
  double approx_mse = 0.0;
  double recon_mse = 0.0;  // zero for the direct model (it has no decoder)
};

// Inference-mode evaluation of a checkpoint on one pair subset. Deterministic
// and mutation-free; repeated calls return identical numbers.
ValLosses validate(const Checkpoint& ckpt, const Dataset& ds,
                   const std::vector<PairGroundTruth::Entry>& pairs, long batch_size = 128);

double mean_squared_error(const Eigen::VectorXd& pred, const Eigen::VectorXd& target);

// Report serializations: a JSON document with the full curve and a CSV with
// one row per epoch (train columns empty on the baseline row).
nlohmann::json report_to_json(const TrainReport& report);
std::string losses_csv(const TrainReport& report);

}  // namespace dtwapprox
