#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "robust_debias/dof.hpp"
#include "robust_debias/errors.hpp"
#include "test_util.hpp"

using namespace robust_debias;

namespace {

SolverOptions tight() {
  SolverOptions o;
  o.kkt_tol = 1e-11;
  return o;
}

}  // namespace

TEST_CASE("empty active set: df = 0 and trace = n_hat") {
  Rng rng(61);
  const Eigen::MatrixXd X = test_util::random_matrix(15, 6, rng);
  const Eigen::VectorXd y = test_util::random_vector(15, rng, 0.3);
  // a huge lambda kills every coordinate
  const FitResult f = fit(X, y, RobustLoss::huber(1.0), Penalty::elastic_net(50.0, 0.5));
  REQUIRE(f.active_set.empty());
  const TraceReport rep = huber_enet_trace(f, X);
  CHECK(rep.df == 0.0);
  CHECK(rep.trace_value == doctest::Approx(static_cast<double>(f.n_hat)));
}

TEST_CASE("tau = 0 with all residuals quadratic: df equals the active size") {
  Rng rng(67);
  const Eigen::Index n = 24, p = 5;
  const Eigen::MatrixXd X = test_util::random_matrix(n, p, rng);
  const Eigen::VectorXd y = test_util::random_vector(n, rng, 0.2);
  // sigma large enough that every residual stays in the quadratic zone
  const RobustLoss loss = RobustLoss::huber(5.0);
  const Penalty lasso = Penalty::elastic_net_allow_tau_zero(1e-4, 0.0);
  const FitResult f = fit(X, y, loss, lasso, tight());
  REQUIRE(f.n_hat == static_cast<std::size_t>(n));
  const TraceReport rep = huber_enet_trace(f, X);
  CHECK(std::abs((rep.df) - (static_cast<double>(f.active_size()))) <= 1e-8);
}

TEST_CASE("closed form agrees with the numeric trace on a random instance") {
  Rng rng(71);
  const Eigen::Index n = 30, p = 10;
  const Eigen::MatrixXd X = test_util::random_matrix(n, p, rng);
  const Eigen::VectorXd beta = test_util::random_vector(p, rng);
  const Eigen::VectorXd y = X * beta + test_util::random_vector(n, rng);
  const RobustLoss loss = RobustLoss::huber(1.0);
  const Penalty pen = Penalty::elastic_net(0.1, 0.5);

  const FitResult f = fit(X, y, loss, pen, tight());
  const TraceReport closed = huber_enet_trace(f, X);
  const TraceReport fd = finite_difference_trace(X, y, loss, pen, tight());
  REQUIRE(fd.skipped.empty());
  CHECK(std::abs(closed.trace_value - fd.trace_value) <=
        1e-3 * std::abs(closed.trace_value));
}

TEST_CASE("ridge in the quadratic zone reproduces the hat-matrix trace") {
  Rng rng(73);
  const Eigen::Index n = 20, p = 6;
  const Eigen::MatrixXd X = test_util::random_matrix(n, p, rng);
  const Eigen::VectorXd y = test_util::random_vector(n, rng, 0.1);
  const double tau = 0.8;
  const RobustLoss loss = RobustLoss::huber(8.0);  // residuals all quadratic
  const Penalty pen = Penalty::ridge(tau);

  const TraceReport fd = finite_difference_trace(X, y, loss, pen, tight());
  Eigen::MatrixXd G = X.transpose() * X;
  G.diagonal().array() += static_cast<double>(n) * tau;
  const double hat_trace = (X * G.ldlt().solve(X.transpose())).trace();
  CHECK(std::abs(fd.trace_value - (static_cast<double>(n) - hat_trace)) <= 2e-3);
}

TEST_CASE("central differences are second order (Richardson)") {
  Rng rng(79);
  const Eigen::Index n = 15, p = 4;
  const Eigen::MatrixXd X = test_util::random_matrix(n, p, rng);
  const Eigen::VectorXd y = test_util::random_vector(n, rng, 2.0);
  const RobustLoss loss = RobustLoss::pseudo_huber(1.0);  // smooth: no kinks
  const Penalty pen = Penalty::ridge(0.9);
  SolverOptions vtight;
  vtight.kkt_tol = 1e-13;

  const double t4 = finite_difference_trace(X, y, loss, pen, vtight, 4e-3).trace_value;
  const double t2 = finite_difference_trace(X, y, loss, pen, vtight, 2e-3).trace_value;
  const double t1 = finite_difference_trace(X, y, loss, pen, vtight, 1e-3).trace_value;
  const double d1 = std::abs(t4 - t2);
  const double d2 = std::abs(t2 - t1);
  CHECK(d2 <= 0.4 * d1 + 1e-5);
}

TEST_CASE("hutchinson agrees with the fd trace within 3 standard errors") {
  Rng rng(83);
  const Eigen::Index n = 18, p = 5;
  const Eigen::MatrixXd X = test_util::random_matrix(n, p, rng);
  const Eigen::VectorXd y = test_util::random_vector(n, rng, 1.5);
  const RobustLoss loss = RobustLoss::huber(1.0);
  const Penalty pen = Penalty::elastic_net(0.1, 0.6);

  const TraceReport fd = finite_difference_trace(X, y, loss, pen, tight());
  REQUIRE(fd.skipped.empty());
  const TraceReport hut = hutchinson_trace(X, y, loss, pen, tight(), 400, 99);
  CHECK(std::abs(hut.trace_value - fd.trace_value) <= 3.0 * hut.mc_se + 1e-6);
}

TEST_CASE("hutchinson probe in the null direction contributes zero") {
  Rng rng(89);
  const Eigen::Index n = 10, p = 3;
  const Eigen::MatrixXd X = test_util::random_matrix(n, p, rng);
  // every residual far out in the linear zone: psi is locally constant in y
  const Eigen::VectorXd y = 50.0 * Eigen::VectorXd::Ones(n) + test_util::random_vector(n, rng);
  const RobustLoss loss = RobustLoss::huber(1.0);
  const Penalty pen = Penalty::elastic_net(0.2, 1.0);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = (i % 2 == 0) ? 1.0 : -1.0;
  const double est = hutchinson_probe_estimate(X, y, loss, pen, tight(), v, 1e-4);
  CHECK(std::abs((est) - (0.0)) <= 1e-8);
}

TEST_CASE("hutchinson is reproducible bit-for-bit for a fixed seed") {
  Rng rng(97);
  const Eigen::MatrixXd X = test_util::random_matrix(12, 4, rng);
  const Eigen::VectorXd y = test_util::random_vector(12, rng, 1.2);
  const RobustLoss loss = RobustLoss::huber(1.0);
  const Penalty pen = Penalty::elastic_net(0.1, 0.5);
  const TraceReport a = hutchinson_trace(X, y, loss, pen, tight(), 50, 12345);
  const TraceReport b = hutchinson_trace(X, y, loss, pen, tight(), 50, 12345);
  CHECK(a.trace_value == b.trace_value);
  CHECK(a.mc_se == b.mc_se);
}

TEST_CASE("df is invariant under column permutation") {
  Rng rng(101);
  const Eigen::Index n = 25, p = 8;
  const Eigen::MatrixXd X = test_util::random_matrix(n, p, rng);
  const Eigen::VectorXd beta = test_util::random_vector(p, rng);
  const Eigen::VectorXd y = X * beta + test_util::random_vector(n, rng);
  const RobustLoss loss = RobustLoss::huber(1.0);
  const Penalty pen = Penalty::elastic_net(0.15, 0.4);

  const FitResult f1 = fit(X, y, loss, pen, tight());
  const TraceReport r1 = huber_enet_trace(f1, X);

  Eigen::MatrixXd Xp(n, p);  // reverse the columns
  for (Eigen::Index j = 0; j < p; ++j) Xp.col(j) = X.col(p - 1 - j);
  const FitResult f2 = fit(Xp, y, loss, pen, tight());
  const TraceReport r2 = huber_enet_trace(f2, Xp);
  CHECK(std::abs((r1.df) - (r2.df)) <= 1e-7);
}

TEST_CASE("increasing tau decreases df") {
  Rng rng(103);
  for (int t = 0; t < 5; ++t) {
    const Eigen::Index n = 30, p = 10;
    const Eigen::MatrixXd X = test_util::random_matrix(n, p, rng);
    const Eigen::VectorXd beta = test_util::random_vector(p, rng);
    const Eigen::VectorXd y = X * beta + test_util::random_vector(n, rng);
    const RobustLoss loss = RobustLoss::huber(1.0);

    const FitResult f1 = fit(X, y, loss, Penalty::elastic_net(0.05, 0.2), tight());
    const TraceReport r1 = huber_enet_trace(f1, X);
    const FitResult f2 = fit(X, y, loss, Penalty::elastic_net(0.05, 2.0), tight());
    const TraceReport r2 = huber_enet_trace(f2, X);
    if (f1.active_set.empty()) continue;
    CHECK(r2.df < r1.df);
  }
}

TEST_CASE("vnm: quadratic zone gives the analytic V and the PSD sandwich") {
  Rng rng(107);
  const Eigen::Index n = 16, p = 5;
  const Eigen::MatrixXd X = test_util::random_matrix(n, p, rng);
  const Eigen::VectorXd y = test_util::random_vector(n, rng, 0.1);
  const double tau = 0.7;
  const RobustLoss loss = RobustLoss::huber(6.0);  // psi' == 1 everywhere
  const FitResult f = fit(X, y, loss, Penalty::ridge(tau), tight());
  REQUIRE(f.n_hat == static_cast<std::size_t>(n));

  const VnmReport rep = vnm_cross_check(f, X, tight());
  // analytic trace via the eigenvalues of X^T X
  Eigen::MatrixXd G = X.transpose() * X;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(G);
  double expected = static_cast<double>(n);
  for (Eigen::Index k = 0; k < p; ++k) {
    const double s = eig.eigenvalues()[k];
    expected -= s / (s + static_cast<double>(n) * tau);
  }
  CHECK(rep.trace_v == doctest::Approx(expected).epsilon(1e-10));
  CHECK(rep.v_lower_slack >= -1e-10);
  CHECK(rep.v_upper_slack >= -1e-10);
  CHECK(rep.dxm_op_norm <= rep.dxm_bound + 1e-10);
}

TEST_CASE("vnm bounds hold on a random huber instance") {
  Rng rng(109);
  const Eigen::Index n = 20, p = 6;
  const Eigen::MatrixXd X = test_util::random_matrix(n, p, rng);
  const Eigen::VectorXd beta = test_util::random_vector(p, rng);
  const Eigen::VectorXd y = X * beta + test_util::random_vector(n, rng, 2.0);
  const FitResult f = fit(X, y, RobustLoss::huber(1.0), Penalty::ridge(0.5), tight());
  const VnmReport rep = vnm_cross_check(f, X, tight());
  CHECK(rep.dxm_op_norm <= 0.5 / std::sqrt(20.0 * 0.5) + 1e-10);  // L = 1
  CHECK(rep.trace_rel_gap <= 1e-3);
}
