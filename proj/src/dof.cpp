#include "robust_debias/dof.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>

#include "robust_debias/errors.hpp"
#include "robust_debias/parallel.hpp"
#include "robust_debias/rng.hpp"
#include "robust_debias/stats.hpp"

namespace robust_debias {

namespace {

double default_step(const Eigen::VectorXd& y) {
  return 1e-4 * (1.0 + y.lpNorm<Eigen::Infinity>());
}

}  // namespace

TraceReport huber_enet_trace(const FitResult& fit, const Eigen::MatrixXd& X,
                             bool allow_pseudo_inverse) {
  if (!fit.loss.is_huber()) {
    throw std::invalid_argument("huber_enet_trace: closed form requires the Huber loss");
  }
  const Eigen::Index n = X.rows();
  const double tau = fit.penalty.tau();
  const auto& S = fit.active_set;
  const Eigen::Index s = static_cast<Eigen::Index>(S.size());

  TraceReport rep;
  rep.method = TraceMethod::closed_form;
  rep.n_hat = fit.n_hat;
  if (s == 0) {
    rep.df = 0.0;
    rep.trace_value = static_cast<double>(fit.n_hat);
    return rep;
  }

  Eigen::MatrixXd Xs(n, s);
  for (Eigen::Index k = 0; k < s; ++k) Xs.col(k) = X.col(S[static_cast<std::size_t>(k)]);
  const Eigen::MatrixXd DXs = fit.psi_prime_vec.asDiagonal() * Xs;

  Eigen::MatrixXd G = Xs.transpose() * DXs;
  G.diagonal().array() += static_cast<double>(n) * tau;
  const Eigen::MatrixXd B = DXs.transpose() * DXs;

  Eigen::LLT<Eigen::MatrixXd> llt(G);
  if (llt.info() == Eigen::Success) {
    rep.df = llt.solve(B).trace();
  } else if (tau == 0.0 && allow_pseudo_inverse) {
    // Rank-deficient active Gram: pseudo-inverse, flagged.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(G);
    const Eigen::VectorXd& ev = eig.eigenvalues();
    const double cutoff = 1e-12 * std::max(1.0, ev.cwiseAbs().maxCoeff());
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(s);
    for (Eigen::Index k = 0; k < s; ++k) inv[k] = (ev[k] > cutoff) ? 1.0 / ev[k] : 0.0;
    const Eigen::MatrixXd pinv =
        eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
    rep.df = (pinv * B).trace();
    rep.pseudo_inverse_used = true;
  } else {
    throw SingularActiveGram("huber_enet_trace: active Gram not positive definite (tau = " +
                             std::to_string(tau) + ", |S| = " + std::to_string(s) + ")");
  }
  rep.trace_value = static_cast<double>(fit.n_hat) - rep.df;
  return rep;
}

TraceReport finite_difference_trace(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                    const RobustLoss& loss, const Penalty& penalty,
                                    const SolverOptions& opts, double step, int threads) {
  const Eigen::Index n = X.rows();
  const FitResult base = fit(X, y, loss, penalty, opts);
  const double h = (step > 0.0) ? step : default_step(y);

  TraceReport rep;
  rep.method = TraceMethod::finite_difference;
  rep.n_hat = base.n_hat;
  rep.step = h;

  std::vector<char> skip(static_cast<std::size_t>(n), 0);
  if (loss.is_huber()) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::abs(std::abs(base.residuals[i]) - loss.sigma()) <= 10.0 * h) {
        skip[static_cast<std::size_t>(i)] = 1;
        rep.skipped.push_back(i);
      }
    }
  }

  std::vector<double> diag(static_cast<std::size_t>(n), 0.0);
  parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t i) {
    if (skip[i]) return;
    Eigen::VectorXd yp = y;
    yp[static_cast<Eigen::Index>(i)] += h;
    const FitResult up = fit(X, yp, loss, penalty, opts, &base.beta_hat);
    yp[static_cast<Eigen::Index>(i)] -= 2.0 * h;
    const FitResult dn = fit(X, yp, loss, penalty, opts, &base.beta_hat);
    diag[i] = (up.psi_vec[static_cast<Eigen::Index>(i)] - dn.psi_vec[static_cast<Eigen::Index>(i)]) / (2.0 * h);
  });

  rep.trace_value = pairwise_sum(diag);
  rep.df = static_cast<double>(rep.n_hat) - rep.trace_value;
  rep.probes = static_cast<int>(n) - static_cast<int>(rep.skipped.size());
  return rep;
}

double hutchinson_probe_estimate(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                 const RobustLoss& loss, const Penalty& penalty,
                                 const SolverOptions& opts, const Eigen::VectorXd& probe,
                                 double step, const Eigen::VectorXd* warm) {
  const Eigen::VectorXd yp = y + step * probe;
  const Eigen::VectorXd ym = y - step * probe;
  const FitResult up = fit(X, yp, loss, penalty, opts, warm);
  const FitResult dn = fit(X, ym, loss, penalty, opts, warm);
  return probe.dot(up.psi_vec - dn.psi_vec) / (2.0 * step);
}

TraceReport hutchinson_trace(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                             const RobustLoss& loss, const Penalty& penalty,
                             const SolverOptions& opts, int probes, std::uint64_t seed,
                             double step, int threads) {
  if (probes < 1) throw std::invalid_argument("hutchinson_trace: need probes >= 1");
  const Eigen::Index n = X.rows();
  const FitResult base = fit(X, y, loss, penalty, opts);
  const double h = (step > 0.0) ? step : default_step(y);

  std::vector<double> est(static_cast<std::size_t>(probes), 0.0);
  parallel_for(static_cast<std::size_t>(probes), threads, [&](std::size_t k) {
    Rng rng = Rng::substream(seed, k);
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.rademacher();
    est[k] = hutchinson_probe_estimate(X, y, loss, penalty, opts, v, h, &base.beta_hat);
  });

  TraceReport rep;
  rep.method = TraceMethod::hutchinson;
  rep.n_hat = base.n_hat;
  rep.step = h;
  rep.probes = probes;
  rep.trace_value = mean(est);
  rep.mc_se = probes > 1 ? sample_sd(est) / std::sqrt(static_cast<double>(probes)) : 0.0;
  rep.df = static_cast<double>(rep.n_hat) - rep.trace_value;
  return rep;
}

VnmReport vnm_cross_check(const FitResult& fit_res, const Eigen::MatrixXd& X,
                          const SolverOptions& opts, int threads, double fd_step) {
  if (fit_res.penalty.kind() != PenaltyKind::ridge) {
    throw std::invalid_argument("vnm_cross_check: needs a twice-differentiable penalty (ridge)");
  }
  const Eigen::Index n = X.rows();
  const double tau = fit_res.penalty.tau();
  const double L = fit_res.loss.lipschitz();
  const double n_tau = static_cast<double>(n) * tau;
  const Eigen::VectorXd& d = fit_res.psi_prime_vec;

  Eigen::MatrixXd G = X.transpose() * (d.asDiagonal() * X);
  G.diagonal().array() += n_tau;
  Eigen::LLT<Eigen::MatrixXd> llt(G);
  if (llt.info() != Eigen::Success) throw SingularActiveGram("vnm_cross_check: Gram factorization failed");
  const Eigen::MatrixXd M = llt.solve(Eigen::MatrixXd::Identity(X.cols(), X.cols()));

  VnmReport rep;
  const Eigen::MatrixXd DXM = d.asDiagonal() * X * M;
  rep.dxm_op_norm = Eigen::JacobiSVD<Eigen::MatrixXd>(DXM).singularValues()(0);
  rep.dxm_bound = 0.5 * std::sqrt(L) / std::sqrt(n_tau);
  if (rep.dxm_op_norm > rep.dxm_bound + 1e-10) {
    throw BoundViolated("vnm: ||diag(psi') X M||_op = " + std::to_string(rep.dxm_op_norm) +
                        " exceeds " + std::to_string(rep.dxm_bound));
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> m_eig(M, Eigen::EigenvaluesOnly);
  rep.m_max_eig = m_eig.eigenvalues().maxCoeff();
  rep.m_bound = 1.0 / n_tau;
  if (rep.m_max_eig > rep.m_bound + 1e-10) {
    throw BoundViolated("vnm: M exceeds (n tau)^{-1} I");
  }

  const Eigen::MatrixXd V =
      Eigen::MatrixXd(d.asDiagonal()) - d.asDiagonal() * X * M * X.transpose() * d.asDiagonal();
  const double x_op = Eigen::JacobiSVD<Eigen::MatrixXd>(X).singularValues()(0) /
                      std::sqrt(static_cast<double>(n));
  const double c = 1.0 / (L / tau * x_op * x_op + 1.0);

  Eigen::MatrixXd lower_gap = V - c * Eigen::MatrixXd(d.asDiagonal());
  Eigen::MatrixXd upper_gap = Eigen::MatrixXd(d.asDiagonal()) - V;
  rep.v_lower_slack =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(0.5 * (lower_gap + lower_gap.transpose()),
                                                     Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
  rep.v_upper_slack =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(0.5 * (upper_gap + upper_gap.transpose()),
                                                     Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
  rep.psi_prime_max = d.maxCoeff();
  if (rep.v_lower_slack < -1e-10) throw BoundViolated("vnm: V lower sandwich bound violated");
  if (rep.v_upper_slack < -1e-10) throw BoundViolated("vnm: V upper sandwich bound violated");
  if (rep.psi_prime_max > L + 1e-12) throw BoundViolated("vnm: diag(psi') exceeds L");

  rep.trace_v = V.trace();
  const Eigen::VectorXd y = fit_res.residuals + X * fit_res.beta_hat;
  const TraceReport fd =
      finite_difference_trace(X, y, fit_res.loss, fit_res.penalty, opts, fd_step, threads);
  rep.trace_fd = fd.trace_value;
  rep.trace_rel_gap = std::abs(rep.trace_v - rep.trace_fd) / std::max(1e-12, std::abs(rep.trace_v));
  if (rep.trace_rel_gap > 1e-3) {
    throw BoundViolated("vnm: trace[V] = " + std::to_string(rep.trace_v) +
                        " disagrees with numeric trace " + std::to_string(rep.trace_fd));
  }
  return rep;
}

}  // namespace robust_debias
