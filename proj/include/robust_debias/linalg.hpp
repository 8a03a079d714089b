#pragma once

#include <Eigen/Core>
#include <cmath>

namespace robust_debias {

// Largest eigenvalue of X^T X (= squared operator norm of X) by power
// iteration with a fixed deterministic start. Good to ~1e-9 relative for
// generic spectra; callers needing certified values use an SVD instead.
inline double op_norm_sq_estimate(const Eigen::MatrixXd& X) {
  const Eigen::Index p = X.cols();
  if (X.size() == 0) return 0.0;
  Eigen::VectorXd v = Eigen::VectorXd::Constant(p, 1.0 / std::sqrt(static_cast<double>(p)));
  double lambda = 0.0;
  for (int it = 0; it < 200; ++it) {
    Eigen::VectorXd w = X.transpose() * (X * v);
    const double norm = w.norm();
    if (norm <= 0.0) return 0.0;
    v = w / norm;
    const double prev = lambda;
    lambda = norm;
    if (it > 4 && std::abs(lambda - prev) <= 1e-10 * lambda) break;
  }
  return lambda;
}

}  // namespace robust_debias
