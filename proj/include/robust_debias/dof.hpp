#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "robust_debias/solver.hpp"

namespace robust_debias {

enum class TraceMethod { closed_form, finite_difference, hutchinson };

// trace[ d psi(y - X beta_hat(y)) / d y ], the quantity dividing the bias
// correction and the variance estimate. For the Huber loss it decomposes as
// n_hat - df.
struct TraceReport {
  double trace_value = 0.0;
  TraceMethod method = TraceMethod::closed_form;
  std::size_t n_hat = 0;
  double df = 0.0;
  // diagnostics
  double step = 0.0;                      // finite-difference step
  int probes = 0;                         // fd: refit pairs; hutchinson: m
  double mc_se = 0.0;                     // hutchinson only
  std::vector<Eigen::Index> skipped;      // fd coords near a Huber kink
  bool pseudo_inverse_used = false;       // tau = 0 rank-deficient fallback
};

// Closed form for Huber + Elastic-Net:
//   df = trace[D X_S (X_S^T D X_S + n tau I)^{-1} X_S^T D], D = diag(psi'),
//   trace = n_hat - df.
// For tau = 0 the active Gram must be invertible; with allow_pseudo_inverse
// a rank-deficient Gram falls back to the pseudo-inverse and flags the run.
TraceReport huber_enet_trace(const FitResult& fit, const Eigen::MatrixXd& X,
                             bool allow_pseudo_inverse = false);

// Central-difference trace: sum_i [psi_i(y + h e_i) - psi_i(y - h e_i)]/(2h)
// with 2n warm-started refits. Coordinates whose residual lies within 10h of
// a Huber kink are skipped and reported. step = 0 picks 1e-4 (1 + ||y||_inf).
TraceReport finite_difference_trace(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                    const RobustLoss& loss, const Penalty& penalty,
                                    const SolverOptions& opts = SolverOptions{},
                                    double step = 0.0, int threads = 1);

// Rademacher-probe estimate of the same trace; reports its MC standard error.
TraceReport hutchinson_trace(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                             const RobustLoss& loss, const Penalty& penalty,
                             const SolverOptions& opts, int probes, std::uint64_t seed,
                             double step = 0.0, int threads = 1);

// Single-probe estimate v^T [psi(y + h v) - psi(y - h v)] / (2h); exposed for
// tests that construct probes in known null directions.
double hutchinson_probe_estimate(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                 const RobustLoss& loss, const Penalty& penalty,
                                 const SolverOptions& opts, const Eigen::VectorXd& probe,
                                 double step, const Eigen::VectorXd* warm = nullptr);

struct VnmReport {
  double dxm_op_norm = 0.0;
  double dxm_bound = 0.0;
  double m_max_eig = 0.0;
  double m_bound = 0.0;
  double v_lower_slack = 0.0;   // min eig(V - c D), c the sandwich constant
  double v_upper_slack = 0.0;   // min eig(D - V)
  double psi_prime_max = 0.0;
  double trace_v = 0.0;
  double trace_fd = 0.0;
  double trace_rel_gap = 0.0;
};

// Cross-checks for a twice-differentiable penalty (ridge): forms
// M = (X^T D X + n G)^{-1} and V = D - D X M X^T D, asserts the operator/PSD
// bounds and that trace[V] matches the numeric trace within 1e-3 relative.
// Throws BoundViolated naming the offending inequality.
VnmReport vnm_cross_check(const FitResult& fit, const Eigen::MatrixXd& X,
                          const SolverOptions& opts = SolverOptions{}, int threads = 1,
                          double fd_step = 0.0);

}  // namespace robust_debias
