#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "fetcpm/calibration.hpp"
#include "fetcpm/cusum.hpp"

using namespace fetcpm;

namespace {

// Exact zero-state ARL of a chart whose increments live on a grid of `step`:
// solve (I - Q) L = 1 over the states 0, step, ..., limit.
double exact_arl(double theta, int up_steps, int down_steps, int limit_steps) {
  const int n = limit_steps + 1;
  std::vector<std::vector<double>> a(n, std::vector<double>(n + 1, 0.0));
  for (int i = 0; i < n; ++i) {
    a[i][i] += 1.0;
    a[i][n] = 1.0;
    const int up = i + up_steps;
    if (up <= limit_steps) a[i][up] -= theta;
    const int down = std::max(0, i - down_steps);
    a[i][down] -= 1.0 - theta;
  }
  for (int c = 0; c < n; ++c) {
    int pivot = c;
    for (int r = c + 1; r < n; ++r) {
      if (std::fabs(a[r][c]) > std::fabs(a[pivot][c])) pivot = r;
    }
    std::swap(a[c], a[pivot]);
    for (int r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = a[r][c] / a[c][c];
      for (int j = c; j <= n; ++j) a[r][j] -= f * a[c][j];
    }
  }
  return a[0][n] / a[0][0];
}

}  // namespace

TEST_CASE("reference value from the two log terms") {
  CHECK(reference_value(0.2, 0.4) == doctest::Approx(std::log(4.0 / 3.0) / std::log(8.0 / 3.0)));
  CHECK(reference_value(0.2, 0.4) == doctest::Approx(0.293305).epsilon(1e-5));
  CHECK(reference_value(0.1, 0.2) == doctest::Approx(0.145244).epsilon(1e-5));
  for (const auto& [a, b] : {std::pair{0.1, 0.2}, {0.2, 0.4}, {0.3, 0.9}, {0.05, 0.06}}) {
    const double k = reference_value(a, b);
    CHECK(k > a);
    CHECK(k < b);
    CHECK(reference_value(1.0 - b, 1.0 - a) == doctest::Approx(1.0 - k).epsilon(1e-12));
  }
  CHECK_THROWS_AS(reference_value(0.4, 0.2), std::invalid_argument);
  CHECK_THROWS_AS(reference_value(0.3, 0.3), std::invalid_argument);
  CHECK_THROWS_AS(reference_value(0.0, 0.3), std::invalid_argument);
  CHECK_THROWS_AS(reference_value(0.3, 1.0), std::invalid_argument);
}

TEST_CASE("one CUSUM step") {
  CHECK(cusum_step(0.5, 1, 0.3) == doctest::Approx(1.2));
  CHECK(cusum_step(0.5, 0, 0.3) == doctest::Approx(0.2));
  CHECK(cusum_step(0.0, 0, 0.7) == 0.0);
  CHECK(cusum_step(0.1, 0, 0.3) == 0.0);
}

TEST_CASE("detector signals once C exceeds the limit") {
  auto config = CusumConfig::design(0.2, 0.4, 1.0);
  CHECK(config.reference_k == doctest::Approx(0.293305).epsilon(1e-5));
  CusumDetector detector(config);
  // 1 - k = 0.7067 per one: C = 0.707, 1.413 -> signal at the second one.
  auto v = detector.step(1);
  CHECK(v.state == DetectorState::monitoring);
  CHECK(v.statistic == doctest::Approx(1.0 - config.reference_k));
  v = detector.step(1);
  CHECK(v.state == DetectorState::changed);
  CHECK(*v.detection_time == 2);
  CHECK_THROWS_AS(detector.step(0), std::logic_error);
  detector.reset();
  CHECK(detector.time() == 0);
  CHECK(detector.statistic() == 0.0);
  CHECK(detector.step(0).statistic == 0.0);
  CHECK_THROWS_AS(detector.step(3), std::invalid_argument);

  CHECK_THROWS_AS(CusumConfig::design(0.2, 0.4, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(CusumConfig::design(0.4, 0.2, 1.0), std::invalid_argument);
}

TEST_CASE("simulated ARL0 agrees with the exact Markov chain value") {
  // k = 0.25 keeps C on multiples of 0.25: a one moves +3 cells, a zero -1.
  CusumConfig config;
  config.theta0 = 0.2;
  config.theta1 = 0.3;
  config.reference_k = 0.25;
  config.limit = 3.0;
  const double exact = exact_arl(0.2, 3, 1, 12);
  const auto summary = empirical_arl0(cusum_factory(config), 0.2, 20000, 1000000, 7);
  MESSAGE("exact " << exact << " simulated " << summary.mean << " se " << summary.standard_error());
  CHECK(summary.capped_count == 0);
  CHECK(std::fabs(summary.mean - exact) < 3.0 * summary.standard_error());
}

TEST_CASE("calibrated limit reaches the target and is the smallest such grid point") {
  CusumLimitSearch search;
  search.n_sims = 4000;
  search.seed = 3;
  const auto cal = calibrate_limit(0.2, 0.4, search);
  CHECK_FALSE(cal.coarse);
  CHECK(cal.reference_k == doctest::Approx(reference_value(0.2, 0.4)));
  CHECK(cal.achieved_arl0 >= 500.0);
  CHECK(cal.arl0_below < 500.0);
  CHECK(cal.achieved_arl0 <= 600.0);
  CHECK(cal.cap == 25000);
  CHECK(std::fabs(cal.limit / search.resolution - std::round(cal.limit / search.resolution)) < 1e-6);

  const auto again = calibrate_limit(0.2, 0.4, search);
  CHECK(again.limit == cal.limit);
  CHECK(again.achieved_arl0 == cal.achieved_arl0);

  search.n_sims = 999;
  CHECK_THROWS_AS(calibrate_limit(0.2, 0.4, search), std::invalid_argument);
  search.n_sims = 1000;
  search.target_arl0 = 1.0;
  CHECK_THROWS_AS(calibrate_limit(0.2, 0.4, search), std::invalid_argument);
}

TEST_CASE("a very coarse statistic is flagged") {
  CusumLimitSearch search;
  search.n_sims = 4000;
  const auto cal = calibrate_limit(0.1, 0.9, search);
  MESSAGE("0.1 -> 0.9: h=" << cal.limit << " ARL0=" << cal.achieved_arl0 << " below=" << cal.arl0_below);
  CHECK(cal.coarse);
  CHECK(cal.achieved_arl0 > 1000.0);
  CHECK(cal.arl0_below < 500.0);
}

TEST_CASE("achieved ARL0 holds up under an independent seed") {
  CusumLimitSearch search;
  search.n_sims = 10000;
  search.seed = 11;
  const auto cal = calibrate_limit(0.5, 0.9, search);
  REQUIRE_FALSE(cal.coarse);
  const auto config = CusumConfig::design(0.5, 0.9, cal.limit);
  const auto check = empirical_arl0(cusum_factory(config), 0.5, 10000, cal.cap, 12345);
  MESSAGE("calibrated " << cal.achieved_arl0 << " re-estimated " << check.mean << " se "
                        << check.standard_error());
  CHECK(check.mean >= 500.0 - 2.0 * check.standard_error());
  CHECK(std::fabs(check.mean - cal.achieved_arl0) <
        2.0 * std::hypot(check.standard_error(), cal.achieved_se));
}
