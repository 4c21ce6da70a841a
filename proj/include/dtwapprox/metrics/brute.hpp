#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <limits>
#include <stdexcept>

#include "dtwapprox/metrics/cost.hpp"
#include "dtwapprox/metrics/dtw.hpp"

namespace dtwapprox {

struct BruteResult {
  double value = std::numeric_limits<double>::infinity();
  std::uint64_t path_count = 0;  // number of admissible warping paths enumerated
};

// Exhaustive reference: enumerates every monotone, continuous path from
// (0,0) to (n-1,m-1) and takes the cheapest. Exponential, so inputs are
// limited to n*m <= 100. Exists purely to validate the dynamic program.
template <typename DX, typename DY>
BruteResult dtw_brute(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y,
                      CostKind kind = CostKind::absolute) {
  detail::check_series(x, "dtw_brute");
  detail::check_series(y, "dtw_brute");
  const Eigen::Index n = x.size(), m = y.size();
  if (n * m > 100)
    throw std::invalid_argument("dtw_brute: series too long for exhaustive search");

  Eigen::MatrixXd cost(n, m);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      cost(i, j) = point_cost(static_cast<double>(x.derived()(i)),
                              static_cast<double>(y.derived()(j)), kind);

  BruteResult out;
  const auto walk = [&](auto&& self, Eigen::Index i, Eigen::Index j, double acc) -> void {
    acc += cost(i, j);
    if (i == n - 1 && j == m - 1) {
      ++out.path_count;
      if (acc < out.value) out.value = acc;
      return;
    }
    if (i + 1 < n && j + 1 < m) self(self, i + 1, j + 1, acc);
    if (i + 1 < n) self(self, i + 1, j, acc);
    if (j + 1 < m) self(self, i, j + 1, acc);
  };
  walk(walk, 0, 0, 0.0);
  return out;
}

}  // namespace dtwapprox
