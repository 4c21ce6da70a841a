#pragma once

#include <Eigen/Core>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "dtwapprox/metrics/cost.hpp"
#include "dtwapprox/metrics/dtw.hpp"

namespace dtwapprox {

struct SoftDtwConfig {
  double gamma = 1.0;
  CostKind cost_kind = CostKind::absolute;
};

namespace detail {

// Smoothed minimum: -gamma * log(e^{-a/g} + e^{-b/g} + e^{-c/g}).
// Factoring out the true minimum keeps every exponent <= 0, so the sum
// never overflows regardless of gamma or cost scale.
inline double softmin3(double a, double b, double c, double gamma) {
  const double m = std::min({a, b, c});
  if (!std::isfinite(m)) return m;
  const double s = std::exp((m - a) / gamma) + std::exp((m - b) / gamma) +
                   std::exp((m - c) / gamma);
  return m - gamma * std::log(s);
}

inline void check_gamma(double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("soft_dtw: gamma must be positive");
}

}  // namespace detail

// Soft alignment cost. Same recursion as the exact program with min replaced
// by a smoothed minimum; value-only variant keeps two rows.
template <typename DX, typename DY>
double soft_dtw(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y,
                const SoftDtwConfig& cfg = {}) {
  detail::check_series(x, "soft_dtw");
  detail::check_series(y, "soft_dtw");
  detail::check_gamma(cfg.gamma);
  const Eigen::Index n = x.size(), m = y.size();
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> prev(static_cast<std::size_t>(m) + 1, inf);
  std::vector<double> cur(static_cast<std::size_t>(m) + 1, inf);
  prev[0] = 0.0;
  for (Eigen::Index i = 1; i <= n; ++i) {
    cur[0] = inf;
    const double xi = static_cast<double>(x.derived()(i - 1));
    for (Eigen::Index j = 1; j <= m; ++j) {
      const double c = point_cost(xi, static_cast<double>(y.derived()(j - 1)), cfg.cost_kind);
      cur[j] = c + detail::softmin3(prev[j - 1], prev[j], cur[j - 1], cfg.gamma);
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

struct SoftDtwGrad {
  double value = 0.0;
  Eigen::VectorXd grad_x;           // d value / d x
  Eigen::MatrixXd alignment;        // expected alignment weights E, n x m
};

// Value and exact gradient with respect to the first series. Forward fills
// the soft cost table R; the backward pass propagates alignment weights E
// from (n,m) using the identity
//   E(i,j) = sum over successors (i',j') of E(i',j') * exp((R(i',j') - R(i,j)
//            - cost(i',j')) / gamma),
// with a padded border so edge cells need no special cases. Every exponent
// is <= 0 by construction of R. The gradient then chains E through the
// pointwise cost derivative. Requires the full table, O(n*m) space.
template <typename DX, typename DY>
SoftDtwGrad soft_dtw_grad(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y,
                          const SoftDtwConfig& cfg = {}) {
  detail::check_series(x, "soft_dtw_grad");
  detail::check_series(y, "soft_dtw_grad");
  detail::check_gamma(cfg.gamma);
  const Eigen::Index n = x.size(), m = y.size();
  constexpr double inf = std::numeric_limits<double>::infinity();
  const double g = cfg.gamma;

  Eigen::MatrixXd cost(n, m);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      cost(i, j) = point_cost(static_cast<double>(x.derived()(i)),
                              static_cast<double>(y.derived()(j)), cfg.cost_kind);

  // R is padded: rows/cols 0 and n+1/m+1 are border cells.
  Eigen::MatrixXd R(n + 2, m + 2);
  R.setConstant(-inf);
  R(0, 0) = 0.0;
  for (Eigen::Index j = 1; j <= m; ++j) R(0, j) = inf;
  for (Eigen::Index i = 1; i <= n; ++i) R(i, 0) = inf;
  for (Eigen::Index i = 1; i <= n; ++i)
    for (Eigen::Index j = 1; j <= m; ++j)
      R(i, j) = cost(i - 1, j - 1) +
                detail::softmin3(R(i - 1, j - 1), R(i - 1, j), R(i, j - 1), g);
  R(n + 1, m + 1) = R(n, m);

  Eigen::MatrixXd E(n + 2, m + 2);
  E.setZero();
  E(n + 1, m + 1) = 1.0;
  // Treat border costs as 0 so the padded corner transition has weight 1.
  const auto cost_at = [&](Eigen::Index i, Eigen::Index j) -> double {
    return (i >= 1 && i <= n && j >= 1 && j <= m) ? cost(i - 1, j - 1) : 0.0;
  };
  for (Eigen::Index j = m; j >= 1; --j) {
    for (Eigen::Index i = n; i >= 1; --i) {
      double e = 0.0;
      if (E(i + 1, j) != 0.0)
        e += E(i + 1, j) * std::exp((R(i + 1, j) - R(i, j) - cost_at(i + 1, j)) / g);
      if (E(i, j + 1) != 0.0)
        e += E(i, j + 1) * std::exp((R(i, j + 1) - R(i, j) - cost_at(i, j + 1)) / g);
      if (E(i + 1, j + 1) != 0.0)
        e += E(i + 1, j + 1) * std::exp((R(i + 1, j + 1) - R(i, j) - cost_at(i + 1, j + 1)) / g);
      E(i, j) = e;
    }
  }

  SoftDtwGrad out;
  out.value = R(n, m);
  out.alignment = E.block(1, 1, n, m);
  out.grad_x = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double gi = 0.0;
    for (Eigen::Index j = 0; j < m; ++j)
      gi += out.alignment(i, j) *
            point_cost_grad(static_cast<double>(x.derived()(i)),
                            static_cast<double>(y.derived()(j)), cfg.cost_kind);
    out.grad_x(i) = gi;
  }
  return out;
}

}  // namespace dtwapprox
