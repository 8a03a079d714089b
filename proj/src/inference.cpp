#include "robust_debias/inference.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <limits>

#include "robust_debias/errors.hpp"
#include "robust_debias/parallel.hpp"
#include "robust_debias/stats.hpp"

namespace robust_debias {

PrecisionInfo::PrecisionInfo(Eigen::MatrixXd sigma) : sigma_(std::move(sigma)) {
  if (sigma_.rows() != sigma_.cols() || sigma_.rows() < 1) {
    throw std::invalid_argument("PrecisionInfo: Sigma must be square");
  }
  if (!sigma_.allFinite()) throw NonFiniteInput("PrecisionInfo: non-finite Sigma");
  Eigen::LLT<Eigen::MatrixXd> llt(sigma_);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("PrecisionInfo: Sigma is not positive definite");
  }
  sigma_inv_ = llt.solve(Eigen::MatrixXd::Identity(sigma_.rows(), sigma_.cols()));
  for (Eigen::Index j = 0; j < sigma_.rows(); ++j) {
    if (!(sigma_inv_(j, j) > 0.0)) {
      throw std::invalid_argument("PrecisionInfo: Omega_jj must be positive");
    }
  }
}

double PrecisionInfo::omega_jj(Eigen::Index j) const { return sigma_inv_(j, j); }

Eigen::VectorXd PrecisionInfo::z_col(const Eigen::MatrixXd& X, Eigen::Index j) const {
  return (X * sigma_inv_.col(j)) / sigma_inv_(j, j);
}

namespace {

void require_nondegenerate(double trace_value, Eigen::Index n) {
  if (std::abs(trace_value) < 1e-8 * static_cast<double>(n)) {
    throw DegenerateTrace("trace[grad_y psi] = " + std::to_string(trace_value) +
                          " is degenerate at n = " + std::to_string(n));
  }
}

}  // namespace

double variance_hat(const Eigen::VectorXd& psi_vec, double trace_value, Eigen::Index n) {
  require_nondegenerate(trace_value, n);
  const double dn = static_cast<double>(n);
  const double num = psi_vec.squaredNorm() / dn;
  const double den = trace_value / dn;
  return num / (den * den);
}

double debias(const FitResult& fit, const Eigen::MatrixXd& X, const PrecisionInfo& prec,
              double trace_value, Eigen::Index j) {
  require_nondegenerate(trace_value, X.rows());
  const Eigen::VectorXd zj = prec.z_col(X, j);
  return fit.beta_hat[j] + prec.omega_jj(j) * fit.psi_vec.dot(zj) / trace_value;
}

PivotOracle pivot_oracle(const FitResult& fit, const Eigen::MatrixXd& X,
                         const PrecisionInfo& prec, double trace_value,
                         Eigen::Index j, double beta_true_j) {
  const double psi_norm = fit.psi_vec.norm();
  if (psi_norm == 0.0) {
    throw ZeroPsi("pivot_oracle: psi(y - X beta_hat) is the zero vector");
  }
  const Eigen::VectorXd zj = prec.z_col(X, j);
  const double n = static_cast<double>(X.rows());
  const double corr = fit.psi_vec.dot(zj);
  const double gap = beta_true_j - fit.beta_hat[j];
  const double omega = prec.omega_jj(j);

  PivotOracle out;
  out.xi = (corr - zj.squaredNorm() / n * gap * trace_value) / psi_norm;
  out.xi_prime = (corr - gap * trace_value / omega) / psi_norm;
  out.z_xi = std::sqrt(omega) * out.xi;
  out.z_xi_prime = std::sqrt(omega) * out.xi_prime;
  return out;
}

CiResult confidence_interval(const FitResult& fit, const Eigen::MatrixXd& X,
                             const PrecisionInfo& prec, double trace_value,
                             Eigen::Index j, double level) {
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("confidence_interval: level in (0,1)");
  const Eigen::Index n = X.rows();
  CiResult ci;
  if (std::abs(trace_value) < 1e-8 * static_cast<double>(n)) {
    ci.lo = -std::numeric_limits<double>::infinity();
    ci.hi = std::numeric_limits<double>::infinity();
    ci.degenerate = true;
    return ci;
  }
  const double center = debias(fit, X, prec, trace_value, j);
  const double v_hat = variance_hat(fit.psi_vec, trace_value, n);
  if (v_hat == 0.0) throw ZeroPsi("confidence_interval: psi vector is zero");
  const double z = normal_quantile(0.5 * (1.0 + level));
  const double half = z * std::sqrt(prec.omega_jj(j) * v_hat / static_cast<double>(n));
  ci.lo = center - half;
  ci.hi = center + half;
  return ci;
}

std::vector<InferenceRow> infer_coords(const FitResult& fit, const Eigen::MatrixXd& X,
                                       const PrecisionInfo& prec, double trace_value,
                                       const std::vector<Eigen::Index>& coords, double level,
                                       int threads) {
  std::vector<InferenceRow> rows(coords.size());
  const Eigen::Index n = X.rows();
  const bool degenerate = std::abs(trace_value) < 1e-8 * static_cast<double>(n);
  const double v_hat = degenerate ? std::numeric_limits<double>::infinity()
                                  : variance_hat(fit.psi_vec, trace_value, n);
  parallel_for(coords.size(), threads, [&](std::size_t k) {
    const Eigen::Index j = coords[k];
    InferenceRow& row = rows[k];
    row.j = j;
    row.beta_hat = fit.beta_hat[j];
    row.omega_jj = prec.omega_jj(j);
    row.v_hat = v_hat;
    if (degenerate) {
      row.debiased = fit.beta_hat[j];
      row.lo = -std::numeric_limits<double>::infinity();
      row.hi = std::numeric_limits<double>::infinity();
      row.flags = "degenerate_trace";
      return;
    }
    row.debiased = debias(fit, X, prec, trace_value, j);
    const CiResult ci = confidence_interval(fit, X, prec, trace_value, j, level);
    row.lo = ci.lo;
    row.hi = ci.hi;
  });
  return rows;
}

}  // namespace robust_debias
