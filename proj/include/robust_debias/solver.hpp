#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <vector>

#include "robust_debias/losses.hpp"
#include "robust_debias/penalties.hpp"

namespace robust_debias {

struct SolverOptions {
  int max_iter = 50000;
  double kkt_tol = 1e-8;
  // 0 means auto: n / ||X||_op^2 (backtracking shrinks it when needed).
  double initial_step = 0.0;
  double backtrack_factor = 0.5;
  // FISTA momentum with restart on objective increase.
  bool acceleration = true;
};

struct FitResult {
  FitResult(RobustLoss loss_in, Penalty penalty_in)
      : loss(loss_in), penalty(penalty_in) {}

  RobustLoss loss;
  Penalty penalty;

  Eigen::VectorXd beta_hat;
  Eigen::VectorXd residuals;       // y - X beta_hat
  Eigen::VectorXd psi_vec;         // psi(residuals)
  Eigen::VectorXd psi_prime_vec;   // psi'(residuals)
  std::vector<Eigen::Index> active_set;
  std::size_t n_hat = 0;           // #{i : psi'(r_i) = 1}
  double kkt_residual = 0.0;
  std::vector<double> objective_trace;
  int iterations = 0;
  bool converged = false;
  bool psi_all_zero = false;       // almost-sure-zero event; flagged, not fatal

  std::size_t active_size() const { return active_set.size(); }
};

// Minimize (1/n) sum_i rho(y_i - x_i^T b) + g(b) by accelerated proximal
// gradient with backtracking. Unique minimizer under tau-strong convexity;
// convergence is certified by the KKT residual
// kkt_distance(g, beta, X^T psi / n) <= kkt_tol.
// On max_iter exhaustion the best iterate is returned with converged=false.
FitResult fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
              const RobustLoss& loss, const Penalty& penalty,
              const SolverOptions& opts = SolverOptions{},
              const Eigen::VectorXd* warm_start = nullptr);

// Composite objective value at b (used by tests and the solver itself).
double objective_value(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       const RobustLoss& loss, const Penalty& penalty,
                       const Eigen::VectorXd& b);

struct StabilityReport {
  double lhs = 0.0;             // n tau ||h - h~||^2 + ||psi - psi~||^2 / L
  double rhs = 0.0;
  bool holds = false;
  double h_diff_norm = 0.0;
  double psi_diff_norm = 0.0;
};

// Evaluate both sides of the perturbation inequality bounding how the pair
// (h, psi) moves when (eps, X) moves to (eps + d_eps, X + dX), for a common
// oracle beta (eps = y - X beta).
StabilityReport stability_check(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                const Eigen::VectorXd& beta_true,
                                const RobustLoss& loss, const Penalty& penalty,
                                const Eigen::MatrixXd& dX, const Eigen::VectorXd& d_eps,
                                const SolverOptions& opts = SolverOptions{},
                                double tol = 1e-10);

}  // namespace robust_debias
