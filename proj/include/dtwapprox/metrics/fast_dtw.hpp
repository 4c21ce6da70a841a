#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <limits>
#include <stdexcept>
#include <vector>

#include "dtwapprox/metrics/cost.hpp"
#include "dtwapprox/metrics/dtw.hpp"

namespace dtwapprox {

namespace detail {

// Per-row inclusive column interval; the search corridor for the refined
// pass. Rows outside [lo, hi] cost infinity.
struct Corridor {
  std::vector<int> lo, hi;
};

// Halve resolution by averaging adjacent pairs; an odd tail element is kept
// as is.
inline Eigen::VectorXd coarsen(const Eigen::VectorXd& x) {
  const Eigen::Index n = x.size();
  Eigen::VectorXd out((n + 1) / 2);
  for (Eigen::Index i = 0; i + 1 < n; i += 2) out(i / 2) = 0.5 * (x(i) + x(i + 1));
  if (n % 2 == 1) out((n - 1) / 2) = x(n - 1);
  return out;
}

// Project a coarse path onto the fine grid (every coarse cell covers a 2x2
// block) and widen it by `radius` cells in every direction. Consecutive path
// cells differ by at most one in each coordinate, so the union is a single
// contiguous interval per row.
inline Corridor expand_window(const WarpingPath& coarse, Eigen::Index n, Eigen::Index m,
                              int radius) {
  Corridor w;
  w.lo.assign(static_cast<std::size_t>(n), int(m));
  w.hi.assign(static_cast<std::size_t>(n), -1);
  for (const auto& [ci, cj] : coarse.steps) {
    const int r0 = std::max(0, 2 * ci - radius);
    const int r1 = std::min(int(n) - 1, 2 * ci + 1 + radius);
    const int c0 = std::max(0, 2 * cj - radius);
    const int c1 = std::min(int(m) - 1, 2 * cj + 1 + radius);
    for (int r = r0; r <= r1; ++r) {
      w.lo[r] = std::min(w.lo[r], c0);
      w.hi[r] = std::max(w.hi[r], c1);
    }
  }
  // The first and last coarse cells cover the fine corners, so (0,0) and
  // (n-1,m-1) are always inside the corridor and every row is touched.
  return w;
}

// Exact dynamic program restricted to the corridor. Cells outside it are
// treated as infinite; backtracking prefers diagonal, then vertical, then
// horizontal, matching the unrestricted program.
inline DtwResult constrained_dtw(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                 const Corridor& w, CostKind kind) {
  const Eigen::Index n = x.size(), m = y.size();
  constexpr double inf = std::numeric_limits<double>::infinity();

  std::vector<std::vector<double>> D(n);
  std::vector<std::vector<unsigned char>> from(n);  // 0 diag, 1 up, 2 left, 3 start
  for (Eigen::Index i = 0; i < n; ++i) {
    D[i].assign(static_cast<std::size_t>(w.hi[i] - w.lo[i] + 1), inf);
    from[i].assign(D[i].size(), 3);
  }
  const auto at = [&](Eigen::Index i, int j) -> double {
    if (i < 0 || j < w.lo[i] || j > w.hi[i]) return inf;
    return D[i][j - w.lo[i]];
  };

  for (Eigen::Index i = 0; i < n; ++i) {
    for (int j = w.lo[i]; j <= w.hi[i]; ++j) {
      const double c = point_cost(x(i), y(j), kind);
      if (i == 0 && j == 0) {
        D[0][j - w.lo[0]] = c;
        continue;
      }
      const double diag = at(i - 1, j - 1);
      const double up = at(i - 1, j);
      const double left = at(i, j - 1);
      const double best = std::min({diag, up, left});
      D[i][j - w.lo[i]] = c + best;
      from[i][j - w.lo[i]] = diag <= up && diag <= left ? 0 : (up <= left ? 1 : 2);
    }
  }

  DtwResult out;
  out.value = D[n - 1][m - 1 - w.lo[n - 1]];
  Eigen::Index i = n - 1;
  int j = int(m) - 1;
  std::vector<std::pair<int, int>> rev;
  while (true) {
    rev.emplace_back(int(i), j);
    if (i == 0 && j == 0) break;
    switch (from[i][j - w.lo[i]]) {
      case 0: --i; --j; break;
      case 1: --i; break;
      default: --j; break;
    }
  }
  out.path.steps.assign(rev.rbegin(), rev.rend());
  return out;
}

inline DtwResult fast_dtw_recurse(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                  int radius, CostKind kind) {
  const Eigen::Index min_size = radius + 2;
  if (x.size() <= min_size || y.size() <= min_size) return dtw(x, y, kind);
  const DtwResult coarse = fast_dtw_recurse(coarsen(x), coarsen(y), radius, kind);
  const Corridor w = expand_window(coarse.path, x.size(), y.size(), radius);
  return constrained_dtw(x, y, w, kind);
}

}  // namespace detail

// Multiresolution approximation: coarsen, solve recursively, then refine the
// projected path inside a corridor of the given radius. Returned value is
// the exact cost of the returned path, so it never undercuts the optimum,
// and a radius covering the whole grid reproduces it. Inputs are evaluated
// in a canonical order so the result is symmetric in (x, y).
template <typename DX, typename DY>
DtwResult fast_dtw(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y,
                   int radius = 1, CostKind kind = CostKind::absolute) {
  detail::check_series(x, "fast_dtw");
  detail::check_series(y, "fast_dtw");
  if (radius < 0) throw std::invalid_argument("fast_dtw: radius must be non-negative");
  Eigen::VectorXd a = x.derived().template cast<double>();
  Eigen::VectorXd b = y.derived().template cast<double>();

  bool swapped = a.size() > b.size();
  if (a.size() == b.size()) {
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      if (a(i) != b(i)) {
        swapped = a(i) > b(i);
        break;
      }
    }
  }
  if (swapped) std::swap(a, b);

  DtwResult res = detail::fast_dtw_recurse(a, b, radius, kind);
  if (swapped)
    for (auto& [i, j] : res.path.steps) std::swap(i, j);
  return res;
}

}  // namespace dtwapprox
