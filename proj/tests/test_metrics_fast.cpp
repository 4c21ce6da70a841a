#include <Eigen/Core>
#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "dtwapprox/metrics/dtw.hpp"
#include "dtwapprox/metrics/fast_dtw.hpp"
#include "dtwapprox/rng.hpp"
#include "test_support.hpp"

using namespace dtwapprox;

TEST_CASE("fast path search is exact when the corridor covers the grid") {
  Rng rng(53);
  for (int rep = 0; rep < 6; ++rep) {
    const int n = 2 + int(rng.below(60)), m = 2 + int(rng.below(60));
    const Eigen::VectorXd x = dtwtest::random_series(rng, n);
    const Eigen::VectorXd y = dtwtest::random_series(rng, m);
    const int radius = std::max(n, m);
    const DtwResult fast = fast_dtw(x, y, radius);
    CHECK(fast.value == doctest::Approx(dtw_value(x, y)).epsilon(1e-12));
    CHECK(fast.path.valid_for(n, m));
  }
}

TEST_CASE("fast path value is the exact cost of its own path and never undercuts the optimum") {
  Rng rng(59);
  for (int radius : {0, 1, 3}) {
    for (int rep = 0; rep < 6; ++rep) {
      const int n = 20 + int(rng.below(180)), m = 20 + int(rng.below(180));
      const Eigen::VectorXd x = dtwtest::random_series(rng, n);
      const Eigen::VectorXd y = dtwtest::random_series(rng, m);
      const DtwResult fast = fast_dtw(x, y, radius);
      CHECK(fast.path.valid_for(n, m));
      CHECK(fast.value == doctest::Approx(path_cost(x, y, fast.path)).epsilon(1e-12));
      CHECK(fast.value >= dtw_value(x, y) - 1e-9);
    }
  }
}

TEST_CASE("fast path handles short inputs by direct search") {
  Rng rng(61);
  for (int n = 1; n <= 6; ++n) {
    const Eigen::VectorXd x = dtwtest::random_series(rng, n);
    const Eigen::VectorXd y = dtwtest::random_series(rng, 7 - n);
    CHECK(fast_dtw(x, y, 1).value == doctest::Approx(dtw_value(x, y)).epsilon(1e-12));
  }
}

TEST_CASE("fast path is symmetric in its arguments") {
  Rng rng(67);
  for (int rep = 0; rep < 6; ++rep) {
    const int n = 30 + int(rng.below(100)), m = 30 + int(rng.below(100));
    const Eigen::VectorXd x = dtwtest::random_series(rng, n);
    const Eigen::VectorXd y = dtwtest::random_series(rng, m);
    const DtwResult a = fast_dtw(x, y, 1);
    const DtwResult b = fast_dtw(y, x, 1);
    CHECK(a.value == b.value);  // bitwise: same computation after canonical ordering
    REQUIRE(a.path.steps.size() == b.path.steps.size());
    for (std::size_t s = 0; s < a.path.steps.size(); ++s) {
      CHECK(a.path.steps[s].first == b.path.steps[s].second);
      CHECK(a.path.steps[s].second == b.path.steps[s].first);
    }
  }
}

TEST_CASE("fast path identity and smooth-input accuracy") {
  Eigen::VectorXd x(512), y(512);
  for (int i = 0; i < 512; ++i) {
    x(i) = std::sin(2.0 * M_PI * i / 512.0);
    y(i) = std::sin(2.0 * M_PI * (i + 8) / 512.0);
  }
  CHECK(fast_dtw(x, x, 1).value == doctest::Approx(0.0));
  // Slowly varying inputs keep the optimal path inside a radius-1 corridor
  // at every resolution, so the refinement reproduces the exact value.
  const double exact = dtw_value(x, y);
  CHECK(fast_dtw(x, y, 1).value == doctest::Approx(exact).epsilon(1e-12));
}

TEST_CASE("fast path larger radius tracks the exact value on rough inputs") {
  Rng rng(71);
  const Eigen::VectorXd x = dtwtest::random_series(rng, 256);
  const Eigen::VectorXd y = dtwtest::random_series(rng, 256);
  const double exact = dtw_value(x, y);
  const double approx_r0 = fast_dtw(x, y, 0).value;
  const double approx_big = fast_dtw(x, y, 256).value;
  CHECK(approx_big == doctest::Approx(exact).epsilon(1e-12));
  CHECK(approx_r0 >= exact - 1e-9);
}

TEST_CASE("fast path rejects bad arguments") {
  Eigen::VectorXd x(4), empty(0);
  x << 0, 1, 2, 3;
  CHECK_THROWS_AS((void)fast_dtw(x, empty, 1), std::invalid_argument);
  CHECK_THROWS_AS((void)fast_dtw(x, x, -1), std::invalid_argument);
}
