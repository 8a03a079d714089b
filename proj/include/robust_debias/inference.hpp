#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "robust_debias/solver.hpp"

namespace robust_debias {

// Known covariance of the design rows plus the derived per-coordinate
// quantities: Omega_jj = e_j^T Sigma^{-1} e_j and the decoupled direction
// z_j = X Sigma^{-1} e_j / Omega_jj. Sigma^{-1} is computed once through a
// Cholesky factorization; the object is immutable afterwards and safe to
// share across threads.
class PrecisionInfo {
public:
  explicit PrecisionInfo(Eigen::MatrixXd sigma);

  Eigen::Index dim() const { return sigma_.rows(); }
  double omega_jj(Eigen::Index j) const;
  Eigen::VectorXd z_col(const Eigen::MatrixXd& X, Eigen::Index j) const;
  const Eigen::MatrixXd& sigma() const { return sigma_; }
  const Eigen::MatrixXd& sigma_inv() const { return sigma_inv_; }

private:
  Eigen::MatrixXd sigma_;
  Eigen::MatrixXd sigma_inv_;
};

// V_hat = (||psi||^2 / n) / (trace/n)^2. Throws DegenerateTrace when
// |trace| < 1e-8 n (the interval length would be infinite).
double variance_hat(const Eigen::VectorXd& psi_vec, double trace_value, Eigen::Index n);

// beta_hat_j + Omega_jj psi^T z_j / trace.
double debias(const FitResult& fit, const Eigen::MatrixXd& X, const PrecisionInfo& prec,
              double trace_value, Eigen::Index j);

struct PivotOracle {
  double xi = 0.0;
  double xi_prime = 0.0;
  double z_xi = 0.0;        // Omega_jj^{1/2} xi_j
  double z_xi_prime = 0.0;  // Omega_jj^{1/2} xi'_j
};

// Oracle pivot statistics (simulation mode; requires the true beta_j).
PivotOracle pivot_oracle(const FitResult& fit, const Eigen::MatrixXd& X,
                         const PrecisionInfo& prec, double trace_value,
                         Eigen::Index j, double beta_true_j);

struct CiResult {
  double lo = 0.0;
  double hi = 0.0;
  bool degenerate = false;  // (-inf, +inf) sentinel
};

CiResult confidence_interval(const FitResult& fit, const Eigen::MatrixXd& X,
                             const PrecisionInfo& prec, double trace_value,
                             Eigen::Index j, double level);

struct InferenceRow {
  Eigen::Index j = 0;  // 0-based
  double beta_hat = 0.0;
  double debiased = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double omega_jj = 0.0;
  double v_hat = 0.0;
  std::string flags;  // "degenerate_trace" etc., empty when clean
};

// Debiased estimate + CI for each requested coordinate (parallel over j).
std::vector<InferenceRow> infer_coords(const FitResult& fit, const Eigen::MatrixXd& X,
                                       const PrecisionInfo& prec, double trace_value,
                                       const std::vector<Eigen::Index>& coords, double level,
                                       int threads = 1);

}  // namespace robust_debias
