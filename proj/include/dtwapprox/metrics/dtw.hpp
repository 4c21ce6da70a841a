#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "dtwapprox/metrics/cost.hpp"

namespace dtwapprox {

// Index alignment between two series, 0-based, ordered from (0,0) to
// (n-1, m-1). Each step advances i, j, or both by one.
struct WarpingPath {
  std::vector<std::pair<int, int>> steps;

  // Checks monotonicity, continuity, endpoints and the n+m-1 length bound.
  bool valid_for(Eigen::Index n, Eigen::Index m) const {
    if (steps.empty()) return false;
    if (steps.front() != std::pair<int, int>{0, 0}) return false;
    if (steps.back() != std::pair<int, int>{int(n) - 1, int(m) - 1}) return false;
    if (steps.size() > static_cast<std::size_t>(n + m - 1)) return false;
    for (std::size_t s = 1; s < steps.size(); ++s) {
      const int di = steps[s].first - steps[s - 1].first;
      const int dj = steps[s].second - steps[s - 1].second;
      if (di < 0 || dj < 0 || di > 1 || dj > 1 || (di == 0 && dj == 0)) return false;
    }
    return true;
  }
};

struct DtwResult {
  double value = 0.0;
  WarpingPath path;
};

namespace detail {

template <typename D>
void check_series(const Eigen::MatrixBase<D>& x, const char* who) {
  if (x.size() == 0) throw std::invalid_argument(std::string(who) + ": empty series");
  if (x.rows() != 1 && x.cols() != 1)
    throw std::invalid_argument(std::string(who) + ": expected a vector");
}

}  // namespace detail

// Alignment cost only; two-row dynamic program, O(n*m) time, O(m) space.
template <typename DX, typename DY>
double dtw_value(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y,
                 CostKind kind = CostKind::absolute) {
  detail::check_series(x, "dtw");
  detail::check_series(y, "dtw");
  const Eigen::Index n = x.size(), m = y.size();
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> prev(static_cast<std::size_t>(m) + 1, inf);
  std::vector<double> cur(static_cast<std::size_t>(m) + 1, inf);
  prev[0] = 0.0;
  for (Eigen::Index i = 1; i <= n; ++i) {
    cur[0] = inf;
    const double xi = static_cast<double>(x.derived()(i - 1));
    for (Eigen::Index j = 1; j <= m; ++j) {
      const double c = point_cost(xi, static_cast<double>(y.derived()(j - 1)), kind);
      const double best = std::min({prev[j - 1], prev[j], cur[j - 1]});
      cur[j] = c + best;
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

// Alignment cost plus one optimal path. Keeps the full cost matrix and
// backtracks preferring diagonal, then vertical, then horizontal moves.
template <typename DX, typename DY>
DtwResult dtw(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y,
              CostKind kind = CostKind::absolute) {
  detail::check_series(x, "dtw");
  detail::check_series(y, "dtw");
  const Eigen::Index n = x.size(), m = y.size();
  constexpr double inf = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd D(n + 1, m + 1);
  D.setConstant(inf);
  D(0, 0) = 0.0;
  for (Eigen::Index i = 1; i <= n; ++i) {
    const double xi = static_cast<double>(x.derived()(i - 1));
    for (Eigen::Index j = 1; j <= m; ++j) {
      const double c = point_cost(xi, static_cast<double>(y.derived()(j - 1)), kind);
      D(i, j) = c + std::min({D(i - 1, j - 1), D(i - 1, j), D(i, j - 1)});
    }
  }

  DtwResult out;
  out.value = D(n, m);
  Eigen::Index i = n, j = m;
  std::vector<std::pair<int, int>> rev;
  rev.reserve(static_cast<std::size_t>(n + m - 1));
  while (i > 1 || j > 1) {
    rev.emplace_back(int(i) - 1, int(j) - 1);
    if (i > 1 && j > 1 && D(i - 1, j - 1) <= D(i - 1, j) && D(i - 1, j - 1) <= D(i, j - 1)) {
      --i; --j;
    } else if (i > 1 && (j == 1 || D(i - 1, j) <= D(i, j - 1))) {
      --i;
    } else {
      --j;
    }
  }
  rev.emplace_back(0, 0);
  out.path.steps.assign(rev.rbegin(), rev.rend());
  return out;
}

// Alignment cost of a fixed path; used to cross-check returned paths.
template <typename DX, typename DY>
double path_cost(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y,
                 const WarpingPath& path, CostKind kind = CostKind::absolute) {
  double total = 0.0;
  for (const auto& [i, j] : path.steps)
    total += point_cost(static_cast<double>(x.derived()(i)),
                        static_cast<double>(y.derived()(j)), kind);
  return total;
}

}  // namespace dtwapprox
