#include "robust_debias/stein.hpp"

#include <atomic>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "robust_debias/errors.hpp"
#include "robust_debias/parallel.hpp"
#include "robust_debias/stats.hpp"

namespace robust_debias {

SphereField::SphereField(Eigen::Index n, double radius, Eval eval)
    : n_(n), radius_(radius),
      eval_([f = std::move(eval)](const Eigen::VectorXd& x, const Eigen::VectorXd*,
                                  Eigen::VectorXd*) { return f(x); }) {
  if (n_ < 3) throw std::invalid_argument("SphereField: the identities require n >= 3");
  if (!(radius_ > 0.0)) throw std::invalid_argument("SphereField: radius must be positive");
}

SphereField::SphereField(Eigen::Index n, double radius, EvalWithHint eval)
    : n_(n), radius_(radius), eval_(std::move(eval)) {
  if (n_ < 3) throw std::invalid_argument("SphereField: the identities require n >= 3");
  if (!(radius_ > 0.0)) throw std::invalid_argument("SphereField: radius must be positive");
}

Eigen::VectorXd SphereField::eval_with_hint(const Eigen::VectorXd& x, const Eigen::VectorXd* hint,
                                            Eigen::VectorXd* state_out) const {
  const double norm = x.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw NonFiniteEvaluation("SphereField: cannot project a zero/non-finite point");
  }
  const Eigen::VectorXd on_sphere = (radius_ / norm) * x;
  Eigen::VectorXd out = eval_(on_sphere, hint, state_out);
  if (!out.allFinite() || out.size() != n_) {
    throw NonFiniteEvaluation("SphereField: evaluator returned a non-finite or misshaped vector");
  }
  return out;
}

Eigen::VectorXd SphereField::operator()(const Eigen::VectorXd& x) const {
  return eval_with_hint(x, nullptr, nullptr);
}

SphereField make_identity_field(Eigen::Index n, double radius) {
  return SphereField(n, radius, [](const Eigen::VectorXd& x) { return x; });
}

SphereField make_linear_field(Eigen::MatrixXd A, double radius) {
  const Eigen::Index n = A.rows();
  if (A.cols() != n) throw std::invalid_argument("make_linear_field: A must be square");
  return SphereField(n, radius,
                     [A = std::move(A)](const Eigen::VectorXd& x) -> Eigen::VectorXd { return A * x; });
}

SphereField make_normalized_field(const SphereField& raw) {
  return SphereField(
      raw.dim(), raw.radius(),
      [raw](const Eigen::VectorXd& x, const Eigen::VectorXd* hint,
            Eigen::VectorXd* state_out) -> Eigen::VectorXd {
        Eigen::VectorXd f = raw.eval_with_hint(x, hint, state_out);
        const double norm = f.norm();
        if (norm < 1e-12) throw ZeroPsi("normalized field: ||f|| vanished at a sample");
        return f / norm;
      });
}

SphereField make_psi_plugin_field(const PsiPluginConfig& cfg) {
  struct Frozen {
    Eigen::MatrixXd XQ;
    Eigen::VectorXd beta;
    Eigen::VectorXd eps;
    Eigen::Index column;
    RobustLoss loss;
    Penalty penalty;
    SolverOptions opts;
    Frozen(RobustLoss l, Penalty p) : loss(l), penalty(p) {}
  };
  auto data = std::make_shared<Frozen>(RobustLoss::huber(cfg.huber_sigma),
                                       Penalty::elastic_net(cfg.lambda, cfg.tau));
  Rng rng = Rng::substream(cfg.seed, 0);
  data->XQ.resize(cfg.n, cfg.p);
  for (Eigen::Index i = 0; i < cfg.n; ++i) {
    for (Eigen::Index j = 0; j < cfg.p; ++j) data->XQ(i, j) = rng.normal();
  }
  data->XQ.col(cfg.column).setZero();
  data->beta.resize(cfg.p);
  for (Eigen::Index j = 0; j < cfg.p; ++j) data->beta[j] = rng.bernoulli(0.2) ? 1.0 : 0.0;
  // the target coordinate carries signal, so the response (and hence psi)
  // genuinely depends on the sphere point; a zero coefficient with a
  // small-radius column can leave the field locally constant
  data->beta[cfg.column] = 1.0;
  data->eps.resize(cfg.n);
  for (Eigen::Index i = 0; i < cfg.n; ++i) data->eps[i] = rng.normal();
  data->column = cfg.column;
  data->opts = cfg.solver;

  return SphereField(
      cfg.n, cfg.radius,
      [data](const Eigen::VectorXd& x, const Eigen::VectorXd* hint,
             Eigen::VectorXd* state_out) -> Eigen::VectorXd {
        Eigen::MatrixXd X = data->XQ;
        X.col(data->column) = x;
        const Eigen::VectorXd y = X * data->beta + data->eps;
        FitResult f = fit(X, y, data->loss, data->penalty, data->opts, hint);
        if (state_out) *state_out = f.beta_hat;
        return std::move(f.psi_vec);
      });
}

Eigen::VectorXd sample_sphere(Eigen::Index n, double radius, Rng& rng) {
  if (n < 3) throw std::invalid_argument("sample_sphere: n >= 3 required");
  Eigen::VectorXd z(n);
  double norm = 0.0;
  do {
    for (Eigen::Index i = 0; i < n; ++i) z[i] = rng.normal();
    norm = z.norm();
  } while (!(norm > 0.0));
  return (radius / norm) * z;
}

Eigen::MatrixXd tangential_jacobian(const SphereField& field, const Eigen::VectorXd& z,
                                    double step) {
  const Eigen::Index n = field.dim();
  const double h = (step > 0.0) ? step : 1e-5 * field.radius();
  Eigen::VectorXd state;
  (void)field.eval_with_hint(z, nullptr, &state);
  const Eigen::VectorXd* hint = state.size() > 0 ? &state : nullptr;
  Eigen::MatrixXd J(n, n);
  Eigen::VectorXd x = z;
  for (Eigen::Index k = 0; k < n; ++k) {
    x[k] = z[k] + h;
    const Eigen::VectorXd fp = field.eval_with_hint(x, hint, nullptr);
    x[k] = z[k] - h;
    const Eigen::VectorXd fm = field.eval_with_hint(x, hint, nullptr);
    x[k] = z[k];
    J.col(k) = (fp - fm) / (2.0 * h);
  }
  return J;
}

namespace {

struct PerSample {
  // raw-field statistics
  double f_dot_z = 0.0;
  double f_sq = 0.0;
  double tr_a = 0.0;       // trace(J P_z)
  double fro_a = 0.0;      // ||J P_z||_F^2
  double tr_a_sq = 0.0;    // trace((J P_z)^2)
  // normalized-field statistics
  double xi_norm = 0.0;
  double fro_norm = 0.0;   // ||J_n P_z||_F^2
  double fnorm_len = 0.0;
  bool valid = true;
};

double tiny_scale(double a, double b) { return 1e-10 * (1.0 + std::abs(a) + std::abs(b)); }

struct Moments {
  double mean = 0.0;
  double se = 0.0;
};

Moments moments(const std::vector<double>& v) {
  Moments m;
  m.mean = mean(v);
  m.se = v.size() > 1 ? sample_sd(v) / std::sqrt(static_cast<double>(v.size())) : 0.0;
  return m;
}

}  // namespace

SteinRunResult stein_run(const SphereField& field, std::size_t samples, std::uint64_t seed,
                         const SteinRunRequest& request, double step, int threads) {
  if (samples < 2) throw std::invalid_argument("stein_run: need at least 2 samples");
  const Eigen::Index n = field.dim();
  const double R = field.radius();
  const double h = (step > 0.0) ? step : 1e-5 * R;
  const double dn = static_cast<double>(n);

  // Radial-extension invariance must hold before any Jacobian is trusted.
  {
    Rng rng0 = Rng::substream(seed, 0);
    const Eigen::VectorXd z0 = sample_sphere(n, R, rng0);
    const Eigen::VectorXd f1 = field(z0);
    const Eigen::VectorXd f2 = field(1.75 * z0);
    if ((f1 - f2).lpNorm<Eigen::Infinity>() > 1e-8 * (1.0 + f1.lpNorm<Eigen::Infinity>())) {
      throw AssumptionViolated("stein_run: field is not invariant under radial scaling");
    }
  }

  std::vector<PerSample> stats(samples);
  const bool need_bounds = request.bounds;
  const bool need_poincare = request.poincare;
  Eigen::MatrixXd F_raw, F_norm, Z;
  if (need_poincare) F_raw.resize(static_cast<Eigen::Index>(samples), n);
  if (need_bounds) {
    F_norm.resize(static_cast<Eigen::Index>(samples), n);
    Z.resize(static_cast<Eigen::Index>(samples), n);
  }

  std::atomic<bool> failed{false};
  std::string first_error;

  parallel_for(samples, threads, [&](std::size_t s) {
    if (failed.load(std::memory_order_relaxed)) return;
    try {
      Rng rng = Rng::substream(seed, s);
      const Eigen::VectorXd z = sample_sphere(n, R, rng);
      PerSample& ps = stats[s];

      Eigen::VectorXd state;
      const Eigen::VectorXd f0 = field.eval_with_hint(z, nullptr, &state);
      const Eigen::VectorXd* hint = state.size() > 0 ? &state : nullptr;
      const double f0_len = f0.norm();
      if (need_bounds && f0_len < 1e-12) {
        ps.valid = false;
        return;
      }

      Eigen::MatrixXd J(n, n);
      Eigen::MatrixXd Jn;
      if (need_bounds) Jn.resize(n, n);
      Eigen::VectorXd x = z;
      for (Eigen::Index k = 0; k < n; ++k) {
        x[k] = z[k] + h;
        const Eigen::VectorXd fp = field.eval_with_hint(x, hint, nullptr);
        x[k] = z[k] - h;
        const Eigen::VectorXd fm = field.eval_with_hint(x, hint, nullptr);
        x[k] = z[k];
        J.col(k) = (fp - fm) / (2.0 * h);
        if (need_bounds) {
          const double pn = fp.norm();
          const double mn = fm.norm();
          if (pn < 1e-12 || mn < 1e-12) {
            ps.valid = false;
            return;
          }
          Jn.col(k) = (fp / pn - fm / mn) / (2.0 * h);
        }
      }

      const double zsq = z.squaredNorm();
      const Eigen::VectorXd w = J * z;
      ps.f_dot_z = f0.dot(z);
      ps.f_sq = f0.squaredNorm();
      ps.tr_a = J.trace() - z.dot(w) / zsq;
      ps.fro_a = J.squaredNorm() - w.squaredNorm() / zsq;
      if (request.second_order) {
        const double tr_jj = (J.array() * J.transpose().array()).sum();  // trace(J^2)
        ps.tr_a_sq = tr_jj - 2.0 * z.dot(J * w) / zsq + (z.dot(w) * z.dot(w)) / (zsq * zsq);
      }
      if (need_poincare) F_raw.row(static_cast<Eigen::Index>(s)) = f0;
      if (need_bounds) {
        const Eigen::VectorXd f0n = f0 / f0_len;
        const Eigen::VectorXd wn = Jn * z;
        const double tr_an = Jn.trace() - z.dot(wn) / zsq;
        ps.xi_norm = f0n.dot(z) - R * R / dn * tr_an;
        ps.fro_norm = Jn.squaredNorm() - wn.squaredNorm() / zsq;
        ps.fnorm_len = 1.0;
        F_norm.row(static_cast<Eigen::Index>(s)) = f0n;
        Z.row(static_cast<Eigen::Index>(s)) = z;
      }
    } catch (const std::exception& e) {
      bool expected = false;
      if (failed.compare_exchange_strong(expected, true)) first_error = e.what();
    }
  });
  if (failed.load()) throw NonFiniteEvaluation("stein_run: sample evaluation failed: " + first_error);

  std::vector<std::size_t> idx;
  idx.reserve(samples);
  for (std::size_t s = 0; s < samples; ++s) {
    if (stats[s].valid) idx.push_back(s);
  }
  const std::size_t rejected = samples - idx.size();
  if (idx.size() < 2) throw TooFewSamples("stein_run: every sample was rejected");

  auto gather = [&](auto&& get) {
    std::vector<double> v(idx.size());
    for (std::size_t t = 0; t < idx.size(); ++t) v[t] = get(stats[idx[t]]);
    return v;
  };

  SteinRunResult out;

  if (request.first_order) {
    const auto a = gather([](const PerSample& p) { return p.f_dot_z; });
    const auto b = gather([R, dn](const PerSample& p) { return R * R / (dn - 1.0) * p.tr_a; });
    std::vector<double> diff(a.size());
    for (std::size_t t = 0; t < a.size(); ++t) diff[t] = a[t] - b[t];
    const Moments ma = moments(a), mb = moments(b), md = moments(diff);
    SteinReport rep;
    rep.identity = SteinIdentity::first_order;
    rep.samples = idx.size();
    rep.seed = seed;
    rep.lhs_estimate = ma.mean;
    rep.rhs_estimate = mb.mean;
    rep.mc_se_lhs = ma.se;
    rep.mc_se_rhs = mb.se;
    rep.mc_se_diff = md.se;
    const double comb = std::sqrt(ma.se * ma.se + mb.se * mb.se);
    rep.pass = std::abs(ma.mean - mb.mean) <= 3.0 * comb + tiny_scale(ma.mean, mb.mean);
    rep.rejected = rejected;
    out.first_order = rep;
  }

  if (request.poincare) {
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(n);
    for (std::size_t t = 0; t < idx.size(); ++t) mu += F_raw.row(static_cast<Eigen::Index>(idx[t]));
    mu /= static_cast<double>(idx.size());
    const auto c = gather([](const PerSample& p) { return p.f_sq; });
    const auto d = gather([R, dn](const PerSample& p) { return R * R / (dn - 2.0) * p.fro_a; });
    const Moments mc = moments(c), mdm = moments(d);
    SteinReport rep;
    rep.identity = SteinIdentity::poincare;
    rep.samples = idx.size();
    rep.seed = seed;
    rep.lhs_estimate = mc.mean - mu.squaredNorm();
    rep.rhs_estimate = mdm.mean;
    rep.mc_se_lhs = mc.se;
    rep.mc_se_rhs = mdm.se;
    const double comb = std::sqrt(mc.se * mc.se + mdm.se * mdm.se);
    rep.pass = rep.lhs_estimate <= rep.rhs_estimate + 3.0 * comb +
                                       tiny_scale(rep.lhs_estimate, rep.rhs_estimate);
    rep.rejected = rejected;
    out.poincare = rep;
  }

  if (request.second_order) {
    const auto lhs = gather([R, dn](const PerSample& p) {
      const double u = dn / (R * R) * p.f_dot_z - p.tr_a;
      return u * u;
    });
    const auto rhs = gather([R, dn](const PerSample& p) {
      return dn / (R * R) * p.f_sq + dn / (dn - 2.0) * p.tr_a_sq -
             2.0 / (dn - 2.0) * p.tr_a * p.tr_a;
    });
    const auto rhs_ineq = gather([R, dn](const PerSample& p) {
      return dn / (R * R) * p.f_sq + 1.0 / (1.0 - 2.0 / dn) * p.fro_a;
    });
    const Moments ml = moments(lhs), mr = moments(rhs), mi = moments(rhs_ineq);
    SteinReport rep;
    rep.identity = SteinIdentity::second_order;
    rep.samples = idx.size();
    rep.seed = seed;
    rep.lhs_estimate = ml.mean;
    rep.rhs_estimate = mr.mean;
    rep.mc_se_lhs = ml.se;
    rep.mc_se_rhs = mr.se;
    rep.ineq_rhs_estimate = mi.mean;
    const double comb_eq = std::sqrt(ml.se * ml.se + mr.se * mr.se);
    const double comb_in = std::sqrt(ml.se * ml.se + mi.se * mi.se);
    const bool eq_pass = std::abs(ml.mean - mr.mean) <= 3.0 * comb_eq + tiny_scale(ml.mean, mr.mean);
    rep.ineq_pass = ml.mean <= mi.mean + 3.0 * comb_in + tiny_scale(ml.mean, mi.mean);
    rep.pass = eq_pass && rep.ineq_pass;
    rep.rejected = rejected;
    out.second_order = rep;
  }

  if (request.bounds) {
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(n);
    for (std::size_t t = 0; t < idx.size(); ++t) mu += F_norm.row(static_cast<Eigen::Index>(idx[t]));
    mu /= static_cast<double>(idx.size());
    std::vector<double> w(idx.size()), r1(idx.size()), tdev(idx.size());
    for (std::size_t t = 0; t < idx.size(); ++t) {
      const PerSample& p = stats[idx[t]];
      const double mu_z = mu.dot(Z.row(static_cast<Eigen::Index>(idx[t])));
      w[t] = (p.xi_norm - mu_z) * (p.xi_norm - mu_z);
      r1[t] = 2.0 * R * R * R * R / (dn * dn - 2.0 * dn) * p.fro_norm;
      tdev[t] = std::abs(p.fnorm_len - mu.norm());
    }
    const Moments mw = moments(w), mr1 = moments(r1), mt = moments(tdev);
    std::vector<double> g(idx.size());
    for (std::size_t t = 0; t < idx.size(); ++t) g[t] = stats[idx[t]].fro_norm;
    const Moments mg = moments(g);

    SteinReport rep;
    rep.identity = SteinIdentity::prop_bounds;
    rep.samples = idx.size();
    rep.seed = seed;
    rep.lhs_estimate = mw.mean;
    rep.rhs_estimate = mr1.mean;
    rep.mc_se_lhs = mw.se;
    rep.mc_se_rhs = mr1.se;
    const double comb1 = std::sqrt(mw.se * mw.se + mr1.se * mr1.se);
    const bool pass1 = mw.mean <= mr1.mean + 3.0 * comb1 + tiny_scale(mw.mean, mr1.mean);

    rep.norm_lhs_estimate = mt.mean * mt.mean;
    rep.norm_rhs_estimate = R * R / (dn - 2.0) * mg.mean;
    const double se_lhs2 = 2.0 * mt.mean * mt.se;  // delta method for (E|.|)^2
    const double se_rhs2 = R * R / (dn - 2.0) * mg.se;
    const double comb2 = std::sqrt(se_lhs2 * se_lhs2 + se_rhs2 * se_rhs2);
    rep.norm_pass = rep.norm_lhs_estimate <=
                    rep.norm_rhs_estimate + 3.0 * comb2 +
                        tiny_scale(rep.norm_lhs_estimate, rep.norm_rhs_estimate);
    rep.pass = pass1 && rep.norm_pass;
    rep.rejected = rejected;
    out.bounds = rep;
  }

  return out;
}

SteinReport check_first_order(const SphereField& field, std::size_t samples, std::uint64_t seed,
                              double step, int threads) {
  return *stein_run(field, samples, seed, SteinRunRequest{.first_order = true}, step, threads)
              .first_order;
}

SteinReport check_poincare(const SphereField& field, std::size_t samples, std::uint64_t seed,
                           double step, int threads) {
  return *stein_run(field, samples, seed, SteinRunRequest{.poincare = true}, step, threads).poincare;
}

SteinReport check_second_order(const SphereField& field, std::size_t samples, std::uint64_t seed,
                               double step, int threads) {
  return *stein_run(field, samples, seed, SteinRunRequest{.second_order = true}, step, threads)
              .second_order;
}

SteinReport check_normalized_bounds(const SphereField& raw_field, std::size_t samples,
                                    std::uint64_t seed, double step, int threads) {
  return *stein_run(raw_field, samples, seed, SteinRunRequest{.bounds = true}, step, threads).bounds;
}

}  // namespace robust_debias
