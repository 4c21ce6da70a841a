#include "dtwapprox/data/preprocess.hpp"

#include <algorithm>
#include <json.hpp>
#include <stdexcept>
#include <vector>

#include "dtwapprox/util/fs.hpp"

namespace dtwapprox {

namespace {

double percentile_sorted(const std::vector<double>& sorted, double q) {
  const double h = q * double(sorted.size() - 1);
  const std::size_t lo = std::size_t(h);
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = h - double(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace

PreprocessStats compute_stats(const Dataset& ds) {
  std::vector<double> pooled;
  std::size_t total = 0;
  for (const auto& s : ds.signals) total += std::size_t(s.length());
  if (total == 0) throw std::invalid_argument("compute_stats: dataset holds no samples");
  pooled.reserve(total);
  for (const auto& s : ds.signals)
    for (Eigen::Index i = 0; i < s.length(); ++i) pooled.push_back(double(s.values(i)));
  std::sort(pooled.begin(), pooled.end());

  PreprocessStats st;
  st.p1 = percentile_sorted(pooled, 0.01);
  st.p99 = percentile_sorted(pooled, 0.99);
  const auto clamp = [&st](double v) { return std::min(std::max(v, st.p1), st.p99); };
  st.lo = clamp(pooled.front());
  st.hi = clamp(pooled.back());
  return st;
}

void clip(Dataset& ds, const PreprocessStats& stats) {
  const float lo = float(stats.p1), hi = float(stats.p99);
  for (auto& s : ds.signals) s.values = s.values.cwiseMax(lo).cwiseMin(hi);
}

void minmax(Dataset& ds, const PreprocessStats& stats) {
  const double span = stats.hi - stats.lo;
  if (span <= 0.0) {
    for (auto& s : ds.signals) s.values.setZero();
    return;
  }
  const float lo = float(stats.lo), inv = float(1.0 / span);
  for (auto& s : ds.signals)
    s.values = ((s.values.array() - lo) * inv).cwiseMax(0.f).cwiseMin(1.f);
}

void save_stats(const std::filesystem::path& path, const PreprocessStats& stats) {
  nlohmann::json j{{"p1", stats.p1}, {"p99", stats.p99}, {"lo", stats.lo}, {"hi", stats.hi}};
  atomic_write_file(path, j.dump(2) + "\n");
}

PreprocessStats load_stats(const std::filesystem::path& path) {
  const nlohmann::json j = nlohmann::json::parse(read_file(path));
  PreprocessStats st;
  st.p1 = j.at("p1").get<double>();
  st.p99 = j.at("p99").get<double>();
  st.lo = j.at("lo").get<double>();
  st.hi = j.at("hi").get<double>();
  return st;
}

}  // namespace dtwapprox
