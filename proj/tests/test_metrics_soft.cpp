#include <Eigen/Core>
#include <stdexcept>

#include "doctest.h"
#include "dtwapprox/metrics/dtw.hpp"
#include "dtwapprox/metrics/soft_dtw.hpp"
#include "dtwapprox/rng.hpp"
#include "test_support.hpp"

using namespace dtwapprox;

namespace {

Eigen::MatrixXd cost_matrix(const Eigen::VectorXd& x, const Eigen::VectorXd& y, CostKind kind) {
  Eigen::MatrixXd c(x.size(), y.size());
  for (Eigen::Index i = 0; i < x.size(); ++i)
    for (Eigen::Index j = 0; j < y.size(); ++j) c(i, j) = point_cost(x(i), y(j), kind);
  return c;
}

double enumerated_soft(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                       const SoftDtwConfig& cfg) {
  std::vector<double> costs;
  dtwtest::collect_path_costs(cost_matrix(x, y, cfg.cost_kind), 0, 0, 0.0, costs);
  return dtwtest::soft_min_over_paths(costs, cfg.gamma);
}

}  // namespace

TEST_CASE("soft alignment cost, frozen hand-worked value") {
  Eigen::Vector3d x(0.0, 1.0, 2.0);
  Eigen::Vector2d y(0.0, 2.0);
  SoftDtwConfig cfg;
  cfg.gamma = 0.1;
  // Path costs {1, 1, 2, 3, 3}: -0.1 * ln(2e^-10 + e^-20 + 2e^-30) = 0.9306830...
  const double v = soft_dtw(x, y, cfg);
  CHECK(v == doctest::Approx(0.9306830).epsilon(1e-6));
  CHECK(v == doctest::Approx(enumerated_soft(x, y, cfg)).epsilon(1e-12));
}

TEST_CASE("soft alignment cost equals log-sum-exp over enumerated paths") {
  Rng rng(23);
  for (double gamma : {0.05, 0.3, 1.0, 10.0}) {
    for (int rep = 0; rep < 6; ++rep) {
      const int n = 1 + int(rng.below(5)), m = 1 + int(rng.below(5));
      const Eigen::VectorXd x = dtwtest::random_series(rng, n, -1.0, 1.0);
      const Eigen::VectorXd y = dtwtest::random_series(rng, m, -1.0, 1.0);
      for (CostKind kind : {CostKind::absolute, CostKind::squared}) {
        SoftDtwConfig cfg{gamma, kind};
        CHECK(soft_dtw(x, y, cfg) ==
              doctest::Approx(enumerated_soft(x, y, cfg)).epsilon(1e-10));
        CHECK(soft_dtw_grad(x, y, cfg).value ==
              doctest::Approx(enumerated_soft(x, y, cfg)).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("soft value never exceeds the exact value and grows toward it as gamma shrinks") {
  Rng rng(31);
  for (int rep = 0; rep < 8; ++rep) {
    const Eigen::VectorXd x = dtwtest::random_series(rng, 4 + rng.below(28));
    const Eigen::VectorXd y = dtwtest::random_series(rng, 4 + rng.below(28));
    const double exact = dtw_value(x, y);
    double prev = -1e300;
    for (double gamma : {3.0, 0.5, 0.05, 1e-3}) {
      const double s = soft_dtw(x, y, SoftDtwConfig{gamma, CostKind::absolute});
      CHECK(s <= exact + 1e-9);
      CHECK(s >= prev - 1e-9);  // lower gamma means less smoothing
      prev = s;
    }
    CHECK(std::abs(soft_dtw(x, y, SoftDtwConfig{1e-3, CostKind::absolute}) - exact) < 1e-2);
  }
}

TEST_CASE("soft value is symmetric and finite at extreme gamma") {
  Rng rng(37);
  const Eigen::VectorXd x = dtwtest::random_series(rng, 40);
  const Eigen::VectorXd y = dtwtest::random_series(rng, 33);
  for (double gamma : {1e-6, 1e-3, 1.0, 1e6}) {
    SoftDtwConfig cfg{gamma, CostKind::absolute};
    const double v = soft_dtw(x, y, cfg);
    CHECK(std::isfinite(v));
    CHECK(soft_dtw(y, x, cfg) == doctest::Approx(v).epsilon(1e-9));
  }
  // Large costs with tiny gamma: huge exponent magnitudes must not overflow.
  Eigen::VectorXd bx = dtwtest::random_series(rng, 25, 0.0, 1e6);
  Eigen::VectorXd by = dtwtest::random_series(rng, 25, -1e6, 0.0);
  CHECK(std::isfinite(soft_dtw(bx, by, SoftDtwConfig{1e-6, CostKind::squared})));
}

TEST_CASE("soft gradient matches central finite differences") {
  Rng rng(41);
  const double step = 1e-5;
  for (int rep = 0; rep < 5; ++rep) {
    const Eigen::VectorXd x = dtwtest::random_series(rng, 6 + rng.below(10));
    const Eigen::VectorXd y = dtwtest::tie_free_partner(rng, x, 5 + rng.below(10));
    for (CostKind kind : {CostKind::absolute, CostKind::squared}) {
      for (double gamma : {0.05, 1.0}) {
        SoftDtwConfig cfg{gamma, kind};
        const SoftDtwGrad g = soft_dtw_grad(x, y, cfg);
        double worst = 0.0;
        for (Eigen::Index i = 0; i < x.size(); ++i) {
          Eigen::VectorXd xp = x, xm = x;
          xp(i) += step;
          xm(i) -= step;
          const double fd = (soft_dtw(xp, y, cfg) - soft_dtw(xm, y, cfg)) / (2 * step);
          worst = std::max(worst, std::abs(fd - g.grad_x(i)));
        }
        const double scale = std::max(1.0, g.grad_x.cwiseAbs().maxCoeff());
        CHECK(worst / scale < 1e-4);
      }
    }
  }
}

TEST_CASE("soft gradient stays finite on tied inputs under the absolute cost") {
  // |x_i - y_j| kinks on the diagonal take subgradient 0; nothing blows up.
  Rng rng(43);
  const Eigen::VectorXd x = dtwtest::random_series(rng, 12);
  const SoftDtwGrad g = soft_dtw_grad(x, x, SoftDtwConfig{0.1, CostKind::absolute});
  CHECK(g.grad_x.allFinite());
  CHECK(std::isfinite(g.value));
  CHECK(g.value <= 1e-9);  // exact value is 0; smoothing only lowers it
}

TEST_CASE("soft alignment weights are a proper distribution over path cells") {
  Rng rng(47);
  const Eigen::VectorXd x = dtwtest::random_series(rng, 9);
  const Eigen::VectorXd y = dtwtest::random_series(rng, 7);
  const SoftDtwGrad g = soft_dtw_grad(x, y, SoftDtwConfig{0.5, CostKind::absolute});
  CHECK(g.alignment.minCoeff() >= 0.0);
  // Corner cells belong to every path.
  CHECK(g.alignment(0, 0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(g.alignment(x.size() - 1, y.size() - 1) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("soft alignment rejects bad inputs") {
  Eigen::VectorXd x(3), empty(0);
  x << 0, 1, 2;
  CHECK_THROWS_AS((void)soft_dtw(x, empty, SoftDtwConfig{}), std::invalid_argument);
  CHECK_THROWS_AS((void)soft_dtw(x, x, SoftDtwConfig{0.0, CostKind::absolute}),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)soft_dtw_grad(x, x, SoftDtwConfig{-1.0, CostKind::absolute}),
                  std::invalid_argument);
}
