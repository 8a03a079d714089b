#include "robust_debias/solver.hpp"

#include <algorithm>
#include <cmath>

#include "robust_debias/errors.hpp"
#include "robust_debias/linalg.hpp"

namespace robust_debias {

namespace {

double loss_sum(const RobustLoss& loss, const Eigen::VectorXd& r) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i) s += loss.rho(r[i]);
  return s;
}

void psi_apply(const RobustLoss& loss, const Eigen::VectorXd& r, Eigen::VectorXd& out) {
  out.resize(r.size());
  for (Eigen::Index i = 0; i < r.size(); ++i) out[i] = loss.psi(r[i]);
}

}  // namespace

double objective_value(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       const RobustLoss& loss, const Penalty& penalty,
                       const Eigen::VectorXd& b) {
  const Eigen::VectorXd r = y - X * b;
  return loss_sum(loss, r) / static_cast<double>(y.size()) + penalty.value(b);
}

FitResult fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
              const RobustLoss& loss, const Penalty& penalty,
              const SolverOptions& opts, const Eigen::VectorXd* warm_start) {
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  if (n < 1 || p < 1 || y.size() != n) {
    throw std::invalid_argument("fit: need n >= 1, p >= 1 and matching y");
  }
  if (!X.allFinite() || !y.allFinite()) throw NonFiniteInput("fit: non-finite entry in X or y");
  if (opts.max_iter < 1 || !(opts.kkt_tol > 0.0)) {
    throw std::invalid_argument("fit: bad solver options");
  }
  const double inv_n = 1.0 / static_cast<double>(n);

  const double opnorm_sq = op_norm_sq_estimate(X);
  double step = opts.initial_step > 0.0
                    ? opts.initial_step
                    : (opnorm_sq > 1e-300 ? static_cast<double>(n) / opnorm_sq : 1.0);

  Eigen::VectorXd x = (warm_start && warm_start->size() == p)
                          ? *warm_start
                          : Eigen::VectorXd::Zero(p);
  Eigen::VectorXd x_prev = x;
  Eigen::VectorXd r_x = y - X * x;       // residual at x
  Eigen::VectorXd r_prev = r_x;
  double theta = 1.0;

  double F_x = loss_sum(loss, r_x) * inv_n + penalty.value(x);

  Eigen::VectorXd r_v(n), psi_buf(n), grad(p), cand(p), r_c(n), u(p);
  FitResult result(loss, penalty);
  result.objective_trace.reserve(256);

  bool converged = false;
  int iter = 0;
  double momentum = 0.0;  // (theta_k - 1) / theta_{k+1} from the last update

  for (; iter < opts.max_iter; ++iter) {
    // One proximal-gradient step from `point` residual r_point; returns the
    // new objective and fills cand/r_c. Backtracks until the quadratic upper
    // bound (sufficient decrease) holds.
    auto attempt = [&](const Eigen::VectorXd& point, const Eigen::VectorXd& r_point) {
      const double f_point = loss_sum(loss, r_point) * inv_n;
      psi_apply(loss, r_point, psi_buf);
      grad.noalias() = -(X.transpose() * psi_buf) * inv_n;
      double f_cand = 0.0;
      for (int ls = 0; ls < 80; ++ls) {
        cand = penalty.prox(point - step * grad, step);
        r_c.noalias() = y - X * cand;
        f_cand = loss_sum(loss, r_c) * inv_n;
        const Eigen::VectorXd d = cand - point;
        const double quad = f_point + grad.dot(d) + d.squaredNorm() / (2.0 * step);
        if (f_cand <= quad + 1e-12 * (1.0 + std::abs(f_point))) break;
        step *= opts.backtrack_factor;
      }
      return f_cand + penalty.value(cand);
    };

    double F_c;
    if (opts.acceleration && momentum != 0.0) {
      // Momentum point v = x + momentum (x - x_prev); its residual is free.
      const Eigen::VectorXd v = x + momentum * (x - x_prev);
      r_v = r_x + momentum * (r_x - r_prev);
      F_c = attempt(v, r_v);
      if (F_c > F_x) {
        // Restart: drop momentum and step from x itself. The line search
        // guarantees the objective does not increase from here.
        theta = 1.0;
        F_c = attempt(x, r_x);
      }
    } else {
      F_c = attempt(x, r_x);
    }

    x_prev.swap(x);
    x = cand;
    r_prev.swap(r_x);
    r_x = r_c;
    F_x = F_c;
    result.objective_trace.push_back(F_c);

    if (opts.acceleration) {
      const double theta_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
      momentum = (theta - 1.0) / theta_next;
      theta = theta_next;
    }

    // KKT certificate at the new iterate.
    psi_apply(loss, r_x, psi_buf);
    u.noalias() = (X.transpose() * psi_buf) * inv_n;
    const double kkt = penalty.kkt_distance(x, u);
    if (kkt <= opts.kkt_tol) {
      converged = true;
      ++iter;
      break;
    }
  }

  result.beta_hat = x;
  result.residuals = y - X * x;
  psi_apply(loss, result.residuals, result.psi_vec);
  result.psi_prime_vec.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) result.psi_prime_vec[i] = loss.psi_prime(result.residuals[i]);

  result.n_hat = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (result.psi_prime_vec[i] == 1.0) ++result.n_hat;
  }

  const double thresh = 1e-10 * std::max(1.0, result.beta_hat.lpNorm<Eigen::Infinity>());
  for (Eigen::Index j = 0; j < p; ++j) {
    if (std::abs(result.beta_hat[j]) > thresh) result.active_set.push_back(j);
  }

  u.noalias() = (X.transpose() * result.psi_vec) * inv_n;
  result.kkt_residual = penalty.kkt_distance(result.beta_hat, u);
  result.iterations = iter;
  result.converged = converged;
  result.psi_all_zero = (result.psi_vec.lpNorm<Eigen::Infinity>() == 0.0);
  return result;
}

StabilityReport stability_check(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                const Eigen::VectorXd& beta_true,
                                const RobustLoss& loss, const Penalty& penalty,
                                const Eigen::MatrixXd& dX, const Eigen::VectorXd& d_eps,
                                const SolverOptions& opts, double tol) {
  const Eigen::VectorXd eps = y - X * beta_true;
  const Eigen::MatrixXd Xt = X + dX;
  const Eigen::VectorXd yt = Xt * beta_true + (eps + d_eps);

  const FitResult base = fit(X, y, loss, penalty, opts);
  const FitResult pert = fit(Xt, yt, loss, penalty, opts);

  const Eigen::VectorXd h = base.beta_hat - beta_true;
  const Eigen::VectorXd ht = pert.beta_hat - beta_true;
  const Eigen::VectorXd dh = h - ht;
  const Eigen::VectorXd dpsi = base.psi_vec - pert.psi_vec;

  const double n_tau = static_cast<double>(y.size()) * penalty.tau();
  StabilityReport rep;
  rep.h_diff_norm = dh.norm();
  rep.psi_diff_norm = dpsi.norm();
  rep.lhs = n_tau * dh.squaredNorm() + dpsi.squaredNorm() / loss.lipschitz();
  // rhs = (h - h~)^T (X - X~)^T psi + (eps - eps~ + X~ h - X h)^T (psi - psi~)
  rep.rhs = dh.dot((-dX).transpose() * base.psi_vec) + (dX * h - d_eps).dot(dpsi);
  rep.holds = rep.lhs <= rep.rhs + tol;
  return rep;
}

}  // namespace robust_debias
