#include <Eigen/Core>
#include <stdexcept>

#include "doctest.h"
#include "dtwapprox/metrics/brute.hpp"
#include "dtwapprox/metrics/dtw.hpp"
#include "dtwapprox/rng.hpp"
#include "test_support.hpp"

using namespace dtwapprox;

namespace {

// Counts monotone continuous paths on an n x m grid (Delannoy numbers).
std::uint64_t delannoy(int a, int b) {
  Eigen::Matrix<std::uint64_t, Eigen::Dynamic, Eigen::Dynamic> d(a + 1, b + 1);
  for (int i = 0; i <= a; ++i)
    for (int j = 0; j <= b; ++j)
      d(i, j) = (i == 0 || j == 0) ? 1 : d(i - 1, j) + d(i, j - 1) + d(i - 1, j - 1);
  return d(a, b);
}

}  // namespace

TEST_CASE("dtw hand-worked example") {
  Eigen::Vector3d x(0.0, 1.0, 2.0);
  Eigen::Vector2d y(0.0, 2.0);

  // Five admissible paths with costs {1, 1, 2, 3, 3}; optimum 1.
  const BruteResult brute = dtw_brute(x, y);
  CHECK(brute.path_count == 5);
  CHECK(brute.value == doctest::Approx(1.0).epsilon(1e-12));

  CHECK(dtw_value(x, y) == doctest::Approx(1.0).epsilon(1e-12));
  const DtwResult r = dtw(x, y);
  CHECK(r.value == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.path.valid_for(3, 2));
  CHECK(path_cost(x, y, r.path) == doctest::Approx(r.value).epsilon(1e-12));
}

TEST_CASE("dtw agrees with exhaustive search on small random inputs") {
  Rng rng(7);
  for (int n = 1; n <= 7; ++n) {
    for (int m = 1; m <= 7; ++m) {
      for (int rep = 0; rep < 4; ++rep) {
        const Eigen::VectorXd x = dtwtest::random_series(rng, n, -2.0, 2.0);
        const Eigen::VectorXd y = dtwtest::random_series(rng, m, -2.0, 2.0);
        for (CostKind kind : {CostKind::absolute, CostKind::squared}) {
          const BruteResult b = dtw_brute(x, y, kind);
          CHECK(b.path_count == delannoy(n - 1, m - 1));
          CHECK(dtw_value(x, y, kind) == doctest::Approx(b.value).epsilon(1e-12));
          const DtwResult r = dtw(x, y, kind);
          CHECK(r.value == doctest::Approx(b.value).epsilon(1e-12));
          CHECK(r.path.valid_for(n, m));
          CHECK(path_cost(x, y, r.path, kind) == doctest::Approx(b.value).epsilon(1e-12));
        }
      }
    }
  }
}

TEST_CASE("dtw basic invariants") {
  Rng rng(11);
  for (int rep = 0; rep < 10; ++rep) {
    const Eigen::VectorXd x = dtwtest::random_series(rng, 1 + rng.uniform_int(0, 40));
    const Eigen::VectorXd y = dtwtest::random_series(rng, 1 + rng.uniform_int(0, 40));
    const double v = dtw_value(x, y);
    CHECK(v >= 0.0);
    CHECK(dtw_value(y, x) == doctest::Approx(v).epsilon(1e-12));
    CHECK(dtw_value(x, x) == doctest::Approx(0.0).epsilon(1e-12));
    const DtwResult r = dtw(x, y);
    CHECK(r.path.steps.size() <= static_cast<std::size_t>(x.size() + y.size() - 1));
  }
}

TEST_CASE("dtw single-element and constant series") {
  Eigen::VectorXd one(1);
  one << 0.25;
  Eigen::Vector4d y(0.0, 1.0, 0.5, 0.25);
  // A single sample must align with every sample of the other series.
  CHECK(dtw_value(one, y) == doctest::Approx(0.25 + 0.75 + 0.25 + 0.0).epsilon(1e-12));
  CHECK(dtw_value(one, one) == doctest::Approx(0.0));
  Eigen::VectorXd c1 = Eigen::VectorXd::Constant(9, 0.7);
  Eigen::VectorXd c2 = Eigen::VectorXd::Constant(4, 0.7);
  CHECK(dtw_value(c1, c2) == doctest::Approx(0.0));
}

TEST_CASE("dtw rejects empty input") {
  Eigen::VectorXd empty(0), ok(3);
  ok << 0, 1, 2;
  CHECK_THROWS_AS((void)dtw_value(empty, ok), std::invalid_argument);
  CHECK_THROWS_AS((void)dtw(ok, empty), std::invalid_argument);
  CHECK_THROWS_AS((void)dtw_brute(empty, empty), std::invalid_argument);
}

TEST_CASE("dtw brute rejects oversized input") {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(11), y = Eigen::VectorXd::Zero(11);
  CHECK_THROWS_AS((void)dtw_brute(x, y), std::invalid_argument);
}

TEST_CASE("dtw accepts mixed scalar expressions") {
  // Free functions take Eigen expressions directly, no copies required.
  Eigen::VectorXf xf = Eigen::VectorXf::LinSpaced(16, 0.f, 1.f);
  Eigen::VectorXd yd = Eigen::VectorXd::LinSpaced(16, 0.0, 1.0);
  CHECK(dtw_value(xf, yd.head(8)) == doctest::Approx(dtw_value(xf.cast<double>(), yd.head(8))));
  CHECK(dtw_value(xf.segment(2, 5), xf.segment(2, 5)) == doctest::Approx(0.0));
}
