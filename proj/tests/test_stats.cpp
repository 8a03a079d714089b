#include <doctest.h>

#include <cmath>

#include "robust_debias/stats.hpp"

using namespace robust_debias;

TEST_CASE("normal quantile: standard values") {
  CHECK(std::abs((normal_quantile(0.975)) - (1.959964)) <= 1e-5);
  CHECK(std::abs((normal_quantile(0.5)) - (0.0)) <= 1e-12);
  CHECK(std::abs((normal_quantile(0.84134474606854293)) - (1.0)) <= 1e-9);
  CHECK(std::abs((normal_quantile(0.025)) - (-1.959964)) <= 1e-5);
}

TEST_CASE("normal quantile inverts the cdf to high accuracy") {
  // beyond |x| ~ 5.5 the round trip is limited by the cdf itself
  // (its ulp-level error is amplified by 1/phi(x))
  for (double x = -5.5; x <= 5.5; x += 0.173) {
    CHECK(std::abs((normal_quantile(normal_cdf(x))) - (x)) <= 1e-9);
  }
}

TEST_CASE("ks statistic: degenerate samples") {
  std::vector<double> constant(200, 0.0);
  CHECK(ks_statistic_normal(constant) >= 0.5);
}

TEST_CASE("kolmogorov tail: known values and monotonicity") {
  // 5% asymptotic critical value is about 1.358
  CHECK(std::abs((kolmogorov_tail(1.358)) - (0.05)) <= 2e-3);
  CHECK(kolmogorov_tail(0.0) == 1.0);
  double prev = 1.0;
  for (double x = 0.2; x < 3.0; x += 0.1) {
    const double q = kolmogorov_tail(x);
    CHECK(q <= prev + 1e-12);
    prev = q;
  }
}

TEST_CASE("sorted quantile interpolates") {
  std::vector<double> v{1.0, 2.0, 3.0, 4.0, 5.0};
  CHECK(sorted_quantile(v, 0.5) == doctest::Approx(3.0));
  CHECK(sorted_quantile(v, 0.25) == doctest::Approx(2.0));
  CHECK(sorted_quantile(v, 0.0) == 1.0);
  CHECK(sorted_quantile(v, 1.0) == 5.0);
}

TEST_CASE("mean and unbiased sd") {
  std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  CHECK(mean(v) == doctest::Approx(2.5));
  CHECK(sample_sd(v) == doctest::Approx(std::sqrt(5.0 / 3.0)).epsilon(1e-12));
}
