#include <doctest.h>

#include <cmath>

#include "robust_debias/penalties.hpp"
#include "robust_debias/rng.hpp"
#include "test_util.hpp"

using namespace robust_debias;

TEST_CASE("penalty values") {
  const Penalty en = Penalty::elastic_net(1.0, 2.0);
  Eigen::VectorXd b(2);
  b << 1.0, -1.0;
  CHECK(en.value(b) == doctest::Approx(4.0));  // 2 + 2
  CHECK(Penalty::ridge(1.0).value(Eigen::VectorXd::Zero(3)) == 0.0);

  // elastic_net(0, tau) coincides with ridge(tau)
  Rng rng(7);
  const Penalty en0 = Penalty::elastic_net(0.0, 0.7);
  const Penalty rd = Penalty::ridge(0.7);
  for (int t = 0; t < 20; ++t) {
    const Eigen::VectorXd v = test_util::random_vector(5, rng, 2.0);
    CHECK(en0.value(v) == doctest::Approx(rd.value(v)).epsilon(1e-14));
    CHECK((en0.prox(v, 0.9) - rd.prox(v, 0.9)).norm() == doctest::Approx(0.0));
  }
}

TEST_CASE("prox closed form and limits") {
  const Penalty en = Penalty::elastic_net(1.0, 1.0);
  Eigen::VectorXd v(1);
  v << 3.0;
  CHECK(en.prox(v, 1.0)[0] == doctest::Approx(1.0));  // (3-1)/(1+1)

  const Penalty en2 = Penalty::elastic_net(1.0, 0.1);
  v << 0.5;
  CHECK(en2.prox(v, 1.0)[0] == 0.0);  // |v| <= t lambda

  // prox of a vanishing step approaches the identity
  Rng rng(3);
  const Eigen::VectorXd w = test_util::random_vector(8, rng, 3.0);
  CHECK((en.prox(w, 1e-8) - w).norm() <= 1e-6 * w.norm());
}

TEST_CASE("kkt distance examples") {
  const Penalty en = Penalty::elastic_net(1.0, 1.0);
  Eigen::VectorXd b(1), u(1);
  b << 1.0;
  u << 2.0;
  CHECK(en.kkt_distance(b, u) == doctest::Approx(0.0));
  b << 0.0;
  u << 0.5;
  CHECK(en.kkt_distance(b, u) == doctest::Approx(0.0));
  u << 1.7;
  CHECK(en.kkt_distance(b, u) == doctest::Approx(0.7));
}

TEST_CASE("prox optimality: (v - prox)/t lands in the subdifferential") {
  Rng rng(11);
  for (int t = 0; t < 50; ++t) {
    const double lambda = std::abs(rng.normal());
    const double tau = 0.1 + std::abs(rng.normal());
    const Penalty pen = Penalty::elastic_net(lambda, tau);
    const double step = 0.05 + std::abs(rng.normal());
    const Eigen::VectorXd v = test_util::random_vector(6, rng, 2.0);
    const Eigen::VectorXd pr = pen.prox(v, step);
    const Eigen::VectorXd u = (v - pr) / step;
    CHECK(pen.kkt_distance(pr, u) <= 1e-10);
  }
}

TEST_CASE("prox is firmly nonexpansive on random pairs") {
  Rng rng(13);
  const Penalty pen = Penalty::elastic_net(0.8, 0.3);
  for (int t = 0; t < 50; ++t) {
    const Eigen::VectorXd v1 = test_util::random_vector(7, rng, 3.0);
    const Eigen::VectorXd v2 = test_util::random_vector(7, rng, 3.0);
    CHECK((pen.prox(v1, 0.7) - pen.prox(v2, 0.7)).norm() <= (v1 - v2).norm() + 1e-14);
  }
}

TEST_CASE("strong convexity inequalities on sampled pairs") {
  Rng rng(17);
  const double tau = 0.6;
  const Penalty pen = Penalty::elastic_net(1.2, tau);
  for (int t = 0; t < 50; ++t) {
    const Eigen::VectorXd a = test_util::random_vector(5, rng, 2.0);
    Eigen::VectorXd b = test_util::random_vector(5, rng, 2.0);
    if (t % 3 == 0) b[t % 5] = 0.0;  // exercise the interval at zero
    const double pick_a = 2.0 * rng.uniform() - 1.0;
    const double pick_b = 2.0 * rng.uniform() - 1.0;
    const Eigen::VectorXd u = pen.subgradient(a, pick_a);
    const Eigen::VectorXd ub = pen.subgradient(b, pick_b);

    // first-order form with u in the subdifferential at b
    CHECK(pen.value(a) - pen.value(b) >=
          ub.dot(a - b) + 0.5 * tau * (a - b).squaredNorm() - 1e-10);
    // monotonicity form
    CHECK((u - ub).dot(a - b) >= tau * (a - b).squaredNorm() - 1e-10);
  }
}

TEST_CASE("tau = 0 is rejected except through the simulation override") {
  CHECK_THROWS(Penalty::elastic_net(1.0, 0.0));
  CHECK_THROWS(Penalty::ridge(0.0));
  const Penalty lasso = Penalty::elastic_net_allow_tau_zero(1.0, 0.0);
  CHECK(lasso.tau() == 0.0);
  Eigen::VectorXd v(1);
  v << 3.0;
  CHECK(lasso.prox(v, 1.0)[0] == doctest::Approx(2.0));  // plain soft-threshold
}
