#include "dtwapprox/eval/timing.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <stdexcept>

#include "dtwapprox/util/fs.hpp"

namespace dtwapprox {

namespace {

TimeSeries random_series(Eigen::Index length, Rng& rng) {
  TimeSeries t;
  t.values.resize(length);
  for (Eigen::Index i = 0; i < length; ++i) t.values(i) = float(rng.uniform(0.0, 1.0));
  return t;
}

}  // namespace

TimingReport timing_bench(const std::vector<MetricHandle>& metrics,
                          const std::vector<Eigen::Index>& lengths, int reps, const Rng& rng,
                          int warmup) {
  if (metrics.empty()) throw std::invalid_argument("timing: no metrics given");
  if (lengths.empty()) throw std::invalid_argument("timing: no lengths given");
  if (reps < 1) throw std::invalid_argument("timing: reps must be positive");
  if (warmup < 0) throw std::invalid_argument("timing: warmup must be non-negative");

  using clock = std::chrono::steady_clock;
  TimingReport report;
  report.cells.reserve(lengths.size() * metrics.size());

  for (std::size_t li = 0; li < lengths.size(); ++li) {
    const Eigen::Index L = lengths[li];
    if (L < 1) throw std::invalid_argument("timing: lengths must be positive");
    Rng gen = rng.fork(li);
    std::vector<std::pair<TimeSeries, TimeSeries>> pairs;
    pairs.reserve(std::size_t(reps + warmup));
    for (int r = 0; r < reps + warmup; ++r)
      pairs.push_back({random_series(L, gen), random_series(L, gen)});

    for (const MetricHandle& m : metrics) {
      TimingCell cell;
      cell.metric = m.name;
      cell.length = L;
      cell.reps = reps;
      cell.per_rep_seconds.reserve(std::size_t(reps));
      volatile double sink = 0.0;  // keeps the computed values observable
      for (int w = 0; w < warmup; ++w) sink = m.distance(pairs[w].first, pairs[w].second);
      for (int r = 0; r < reps; ++r) {
        const auto& [a, b] = pairs[std::size_t(warmup + r)];
        const auto t0 = clock::now();
        sink = m.distance(a, b);
        const auto t1 = clock::now();
        cell.per_rep_seconds.push_back(std::chrono::duration<double>(t1 - t0).count());
      }
      (void)sink;
      cell.total_seconds =
          std::accumulate(cell.per_rep_seconds.begin(), cell.per_rep_seconds.end(), 0.0);
      report.cells.push_back(std::move(cell));
    }
  }
  return report;
}

const TimingCell& find_cell(const TimingReport& report, const std::string& metric,
                            Eigen::Index length) {
  const auto it = std::find_if(report.cells.begin(), report.cells.end(),
                               [&](const TimingCell& c) {
                                 return c.metric == metric && c.length == length;
                               });
  if (it == report.cells.end())
    throw std::invalid_argument("timing: no cell for metric '" + metric + "' at length " +
                                std::to_string(long(length)));
  return *it;
}

nlohmann::json timing_to_json(const TimingReport& report) {
  nlohmann::json cells = nlohmann::json::array();
  for (const TimingCell& c : report.cells)
    cells.push_back({{"metric", c.metric},
                     {"length", c.length},
                     {"reps", c.reps},
                     {"total_seconds", c.total_seconds},
                     {"per_rep_seconds", c.per_rep_seconds}});
  return nlohmann::json{{"cells", cells}};
}

std::string timing_csv(const TimingReport& report) {
  std::string out = "metric,length,reps,total_seconds,mean_seconds\n";
  for (const TimingCell& c : report.cells) {
    out += c.metric + "," + std::to_string(long(c.length)) + "," + std::to_string(c.reps) + "," +
           fmt_g9(c.total_seconds) + "," + fmt_g9(c.total_seconds / double(c.reps)) + "\n";
  }
  return out;
}

}  // namespace dtwapprox
