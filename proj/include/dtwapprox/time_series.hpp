#pragma once

#include <Eigen/Core>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dtwapprox {

// Single-channel sampled signal. Values are stored as f32; numeric kernels
// promote to double internally.
struct TimeSeries {
  Eigen::VectorXf values;
  std::string id;
  std::optional<int> label;
  std::string subject;  // grouping tag kept intact across train/val/test

  Eigen::Index length() const { return values.size(); }
};

enum class Split { train, val, test };

inline const char* to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    default: return "test";
  }
}

inline Split split_from_string(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "val") return Split::val;
  if (s == "test") return Split::test;
  throw std::invalid_argument("unknown split tag: " + s);
}

struct Dataset {
  std::vector<TimeSeries> signals;
  std::vector<Split> split;  // one tag per signal
  std::string provenance;    // free-form description of how the data was made

  std::vector<std::size_t> indices_of(Split s) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < signals.size(); ++i)
      if (split[i] == s) out.push_back(i);
    return out;
  }

  void validate() const {
    if (split.size() != signals.size())
      throw std::invalid_argument("dataset: split tags and signals disagree in count");
    for (const auto& s : signals) {
      if (s.length() < 1)
        throw std::invalid_argument("dataset: empty signal '" + s.id + "'");
      if (!s.values.allFinite())
        throw std::invalid_argument("dataset: non-finite values in signal '" + s.id + "'");
    }
  }
};

}  // namespace dtwapprox
