#include "dtwapprox/metrics/ground_truth.hpp"

#include <bit>
#include <cstring>
#include <sstream>
#include <stdexcept>

#include "dtwapprox/metrics/dtw.hpp"
#include "dtwapprox/parallel.hpp"
#include "dtwapprox/util/fs.hpp"

static_assert(std::endian::native == std::endian::little,
              "binary pair files assume a little-endian host");

namespace dtwapprox {

double normalize_dtw(double raw, Eigen::Index len_x, Eigen::Index len_y) {
  if (len_x < 1 || len_y < 1)
    throw std::invalid_argument("normalize_dtw: lengths must be positive");
  return raw / static_cast<double>(std::max(len_x, len_y));
}

PairGroundTruth build_ground_truth(
    const std::vector<TimeSeries>& signals,
    const std::vector<std::pair<std::uint32_t, std::uint32_t>>& pairs, bool normalize,
    CostKind kind, unsigned workers) {
  const std::uint32_t n = static_cast<std::uint32_t>(signals.size());
  for (const auto& [a, b] : pairs)
    if (a >= n || b >= n)
      throw std::invalid_argument("build_ground_truth: pair index out of range");

  PairGroundTruth gt;
  gt.entries.resize(pairs.size());
  parallel_for(pairs.size(), workers, [&](std::size_t k) {
    const auto [a, b] = pairs[k];
    const auto& x = signals[a].values;
    const auto& y = signals[b].values;
    double v = dtw_value(x, y, kind);
    if (normalize) v = normalize_dtw(v, x.size(), y.size());
    gt.entries[k] = {a, b, static_cast<float>(v)};
  });
  return gt;
}

void save_ground_truth_csv(const std::filesystem::path& path, const PairGroundTruth& gt) {
  std::string out = "i,j,value\n";
  out.reserve(out.size() + gt.entries.size() * 24);
  for (const auto& e : gt.entries) {
    out += std::to_string(e.a);
    out += ',';
    out += std::to_string(e.b);
    out += ',';
    out += fmt_g9(e.value);
    out += '\n';
  }
  atomic_write_file(path, out);
}

PairGroundTruth load_ground_truth_csv(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (std::getline(in, line) && !line.empty() && line.back() == '\r') line.pop_back();
  if (line != "i,j,value")
    throw std::runtime_error("pair file " + path.string() + ": bad or missing header");
  PairGroundTruth gt;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    PairGroundTruth::Entry e;
    char extra;
    unsigned long a, b;
    float v;
    if (std::sscanf(line.c_str(), "%lu,%lu,%f%c", &a, &b, &v, &extra) != 3)
      throw std::runtime_error("pair file " + path.string() + ": malformed line " +
                               std::to_string(lineno));
    e.a = static_cast<std::uint32_t>(a);
    e.b = static_cast<std::uint32_t>(b);
    e.value = v;
    gt.entries.push_back(e);
  }
  return gt;
}

void save_ground_truth_bin(const std::filesystem::path& path, const PairGroundTruth& gt) {
  static_assert(sizeof(PairGroundTruth::Entry) == 12);
  atomic_write_file(path, gt.entries.data(), gt.entries.size() * sizeof(PairGroundTruth::Entry));
}

PairGroundTruth load_ground_truth_bin(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> raw = read_file_bytes(path);
  if (raw.size() % 12 != 0)
    throw std::runtime_error("pair file " + path.string() +
                             ": size is not a whole number of 12-byte records");
  PairGroundTruth gt;
  gt.entries.resize(raw.size() / 12);
  std::memcpy(gt.entries.data(), raw.data(), raw.size());
  return gt;
}

void save_ground_truth(const std::filesystem::path& path, const PairGroundTruth& gt) {
  if (path.extension() == ".csv")
    save_ground_truth_csv(path, gt);
  else
    save_ground_truth_bin(path, gt);
}

PairGroundTruth load_ground_truth(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? load_ground_truth_csv(path)
                                    : load_ground_truth_bin(path);
}

}  // namespace dtwapprox
