#pragma once

#include <limits>

namespace dtwapprox {

// Tracks the best validation loss seen so far. Only a strict improvement
// resets the stale counter; stopping fires after `patience` consecutive
// epochs without one.
class EarlyStopper {
 public:
  explicit EarlyStopper(long patience) : patience_(patience) {}

  // Returns true when this epoch improves on the best loss so far.
  bool observe(long epoch, double loss) {
    if (loss < best_) {
      best_ = loss;
      best_epoch_ = epoch;
      stale_ = 0;
      return true;
    }
    ++stale_;
    return false;
  }

  bool should_stop() const { return stale_ >= patience_; }
  double best() const { return best_; }
  long best_epoch() const { return best_epoch_; }
  long stale() const { return stale_; }

 private:
  long patience_;
  double best_ = std::numeric_limits<double>::infinity();
  long best_epoch_ = -1;
  long stale_ = 0;
};

}  // namespace dtwapprox
