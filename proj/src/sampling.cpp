#include "dtwapprox/data/sampling.hpp"

#include <stdexcept>
#include <unordered_set>

namespace dtwapprox {

TimeSeries slice_fixed(const TimeSeries& s, Eigen::Index target_len, Rng& rng) {
  if (target_len < 1) throw std::invalid_argument("slice_fixed: target length must be positive");
  if (s.length() < target_len)
    throw std::invalid_argument("slice_fixed: signal '" + s.id + "' has " +
                                std::to_string(long(s.length())) + " samples, need " +
                                std::to_string(long(target_len)));
  TimeSeries out = s;
  const Eigen::Index offset = Eigen::Index(rng.below(std::uint64_t(s.length() - target_len + 1)));
  out.values = s.values.segment(offset, target_len);
  return out;
}

Dataset slice_fixed(const Dataset& ds, Eigen::Index target_len, Rng& rng) {
  Dataset out;
  out.provenance = ds.provenance;
  out.split = ds.split;
  out.signals.reserve(ds.signals.size());
  for (const auto& s : ds.signals) out.signals.push_back(slice_fixed(s, target_len, rng));
  return out;
}

Dataset sample_lengths(const Dataset& ds, Eigen::Index len_min, Eigen::Index len_max, Rng& rng) {
  if (len_min < 1 || len_max < len_min)
    throw std::invalid_argument("sample_lengths: need 1 <= len_min <= len_max");
  Dataset out;
  out.provenance = ds.provenance;
  out.split = ds.split;
  out.signals.reserve(ds.signals.size());
  for (const auto& s : ds.signals) {
    const Eigen::Index target = Eigen::Index(rng.uniform_int(long(len_min), long(len_max)));
    out.signals.push_back(slice_fixed(s, target, rng));
  }
  return out;
}

std::vector<std::pair<std::uint32_t, std::uint32_t>> sample_pairs(std::uint64_t n_signals,
                                                                  std::uint64_t n_pairs,
                                                                  Rng& rng) {
  if (n_signals == 0) throw std::invalid_argument("sample_pairs: no signals");
  if (n_signals > (std::uint64_t(1) << 32))
    throw std::invalid_argument("sample_pairs: too many signals");
  const std::uint64_t universe = n_signals * n_signals;
  if (n_pairs > universe)
    throw std::invalid_argument("sample_pairs: more pairs requested than exist");

  // Floyd's sampling: uniform over distinct cells, one draw per kept pair.
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(std::size_t(n_pairs) * 2);
  std::vector<std::pair<std::uint32_t, std::uint32_t>> out;
  out.reserve(std::size_t(n_pairs));
  for (std::uint64_t j = universe - n_pairs; j < universe; ++j) {
    std::uint64_t r = rng.below(j + 1);
    if (seen.count(r)) r = j;
    seen.insert(r);
    out.emplace_back(std::uint32_t(r / n_signals), std::uint32_t(r % n_signals));
  }
  return out;
}

std::vector<std::pair<std::uint32_t, std::uint32_t>> sample_split_pairs(const Dataset& ds,
                                                                        Split split,
                                                                        std::uint64_t n_pairs,
                                                                        Rng& rng) {
  const std::vector<std::size_t> idx = ds.indices_of(split);
  if (idx.empty())
    throw std::invalid_argument(std::string("sample_split_pairs: no signals tagged ") +
                                to_string(split));
  auto local = sample_pairs(idx.size(), n_pairs, rng);
  for (auto& [a, b] : local) {
    a = std::uint32_t(idx[a]);
    b = std::uint32_t(idx[b]);
  }
  return local;
}

}  // namespace dtwapprox
