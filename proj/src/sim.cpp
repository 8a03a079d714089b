#include "robust_debias/sim.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "robust_debias/dof.hpp"
#include "robust_debias/errors.hpp"
#include "robust_debias/parallel.hpp"
#include "robust_debias/rng.hpp"
#include "robust_debias/stats.hpp"

namespace robust_debias {

std::vector<double> SimConfig::lambdas() const {
  if (!lambda_grid.empty()) return lambda_grid;
  const double root = 1.0 / std::sqrt(static_cast<double>(n));
  return {root, 2.0 * root};
}

std::vector<double> SimConfig::taus() const {
  if (!tau_grid.empty()) return tau_grid;
  return {0.0, 0.1};
}

std::string noise_name(NoiseLaw law) {
  switch (law) {
    case NoiseLaw::cauchy: return "cauchy";
    case NoiseLaw::student_t2: return "t2";
    case NoiseLaw::normal: return "normal";
  }
  return "?";
}

NoiseLaw noise_from_name(const std::string& name) {
  if (name == "cauchy") return NoiseLaw::cauchy;
  if (name == "t2" || name == "student_t2") return NoiseLaw::student_t2;
  if (name == "normal") return NoiseLaw::normal;
  throw std::invalid_argument("unknown noise law: " + name);
}

SimContext SimContext::make(const SimConfig& cfg) {
  if (cfg.reps < 2) throw std::invalid_argument("SimConfig: reps >= 2 required");
  if (cfg.target_coord < 0 || cfg.target_coord >= cfg.p) {
    throw std::invalid_argument("SimConfig: target_coord out of range");
  }
  // A in {-1, +1}^{2p x p}, row by row, from substream 0 of the master seed.
  Rng rng = Rng::substream(cfg.seed, 0);
  const Eigen::Index p = cfg.p;
  const Eigen::Index rows = 2 * p;
  Eigen::MatrixXd A(rows, p);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) A(i, j) = rng.rademacher();
  }
  const double scale = (cfg.sigma_scale == SigmaScale::over_n)
                           ? 1.0 / static_cast<double>(cfg.n)
                           : 1.0 / static_cast<double>(rows);
  Eigen::MatrixXd sigma = scale * (A.transpose() * A);

  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("SimContext: generated Sigma is not positive definite");
  }
  Eigen::MatrixXd chol = llt.matrixL();
  PrecisionInfo prec(sigma);
  return SimContext(cfg, std::move(sigma), std::move(chol), std::move(prec));
}

Instance gen_instance(const SimContext& ctx, std::size_t rep_index) {
  const SimConfig& cfg = ctx.config();
  Rng rng = Rng::substream(cfg.seed, 1 + rep_index);
  const Eigen::Index n = cfg.n;
  const Eigen::Index p = cfg.p;

  Instance inst;
  Eigen::MatrixXd Z(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) Z(i, j) = rng.normal();
  }
  inst.X.noalias() = Z * ctx.sigma_chol().transpose();

  inst.beta.resize(p);
  for (Eigen::Index j = 0; j < p; ++j) inst.beta[j] = rng.bernoulli(cfg.beta_bernoulli_p) ? 1.0 : 0.0;

  inst.eps.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    switch (cfg.noise) {
      case NoiseLaw::cauchy: inst.eps[i] = rng.cauchy(); break;
      case NoiseLaw::student_t2: inst.eps[i] = rng.student_t2(); break;
      case NoiseLaw::normal: inst.eps[i] = rng.normal(); break;
    }
  }
  inst.y = inst.X * inst.beta + inst.eps;
  return inst;
}

namespace {

struct RepOutcome {
  bool ok = false;
  bool degenerate = false;
  bool pseudo_inverse = false;
  bool not_converged = false;
  double n_hat = 0.0, df = 0.0, active = 0.0, sqrt_vn = 0.0, z_score = 0.0, identity_err = 0.0;
  char covered = 0;
};

}  // namespace

CellReport run_cell(const SimContext& ctx, double lambda, double tau) {
  const SimConfig& cfg = ctx.config();
  const RobustLoss loss = RobustLoss::huber(cfg.huber_sigma);
  const Penalty penalty = Penalty::elastic_net_allow_tau_zero(lambda, tau);
  const Eigen::Index j = cfg.target_coord;
  const double n = static_cast<double>(cfg.n);

  std::vector<RepOutcome> outcomes(cfg.reps);
  parallel_for(cfg.reps, cfg.threads, [&](std::size_t rep) {
    RepOutcome& out = outcomes[rep];
    try {
      const Instance inst = gen_instance(ctx, rep);
      const FitResult f = fit(inst.X, inst.y, loss, penalty, cfg.solver);
      out.not_converged = !f.converged;
      const TraceReport tr = huber_enet_trace(f, inst.X, /*allow_pseudo_inverse=*/true);
      out.pseudo_inverse = tr.pseudo_inverse_used;

      const double v_hat = variance_hat(f.psi_vec, tr.trace_value, cfg.n);
      const PivotOracle pivot =
          pivot_oracle(f, inst.X, ctx.precision(), tr.trace_value, j, inst.beta[j]);

      // Independent recomputation of the z-score through the (n_hat - df) form.
      const Eigen::VectorXd zj = ctx.precision().z_col(inst.X, j);
      const double omega = ctx.precision().omega_jj(j);
      const double alt = ((static_cast<double>(tr.n_hat) - tr.df) * (f.beta_hat[j] - inst.beta[j]) +
                          omega * zj.dot(f.psi_vec)) /
                         (f.psi_vec.norm() * std::sqrt(omega));
      out.identity_err = std::abs(pivot.z_xi_prime - alt);

      const CiResult ci =
          confidence_interval(f, inst.X, ctx.precision(), tr.trace_value, j, cfg.ci_level);
      out.covered = (ci.lo <= inst.beta[j] && inst.beta[j] <= ci.hi) ? 1 : 0;

      out.n_hat = static_cast<double>(f.n_hat);
      out.df = tr.df;
      out.active = static_cast<double>(f.active_size());
      out.sqrt_vn = std::sqrt(v_hat / n);
      out.z_score = pivot.z_xi_prime;
      out.ok = true;
    } catch (const DegenerateTrace&) {
      out.degenerate = true;
      out.ok = false;
    } catch (const Error&) {
      out.ok = false;
    }
  });

  CellReport rep;
  rep.lambda = lambda;
  rep.tau = tau;
  rep.noise = cfg.noise;
  rep.reps = cfg.reps;
  for (const RepOutcome& out : outcomes) {
    if (out.pseudo_inverse) ++rep.pseudo_inverse_uses;
    if (out.not_converged) ++rep.not_converged;
    if (out.degenerate) ++rep.degenerate;
    if (!out.ok) {
      ++rep.failures;
      continue;
    }
    rep.n_hat_values.push_back(out.n_hat);
    rep.df_values.push_back(out.df);
    rep.active_values.push_back(out.active);
    rep.sqrt_vn_values.push_back(out.sqrt_vn);
    rep.z_scores.push_back(out.z_score);
    rep.covered.push_back(out.covered);
    rep.max_identity_err = std::max(rep.max_identity_err, out.identity_err);
  }

  rep.mean_n_hat = mean(rep.n_hat_values);
  rep.sd_n_hat = sample_sd(rep.n_hat_values);
  rep.mean_df = mean(rep.df_values);
  rep.sd_df = sample_sd(rep.df_values);
  rep.mean_active = mean(rep.active_values);
  rep.sd_active = sample_sd(rep.active_values);
  rep.mean_sqrt_vn = mean(rep.sqrt_vn_values);
  rep.sd_sqrt_vn = sample_sd(rep.sqrt_vn_values);
  if (rep.z_scores.size() >= 50) {
    const auto [stat, p] = ks_normal(rep.z_scores);
    rep.ks_stat = stat;
    rep.ks_p = p;
  }
  if (!rep.covered.empty()) {
    std::size_t hits = 0;
    for (char c : rep.covered) hits += static_cast<std::size_t>(c);
    rep.coverage = static_cast<double>(hits) / static_cast<double>(rep.covered.size());
  }
  return rep;
}

std::pair<double, double> ks_normal(std::span<const double> samples) {
  if (samples.size() < 50) {
    throw TooFewSamples("ks_normal: need at least 50 samples, got " +
                        std::to_string(samples.size()));
  }
  const double stat = ks_statistic_normal(samples);
  const double p = kolmogorov_tail(std::sqrt(static_cast<double>(samples.size())) * stat, 100);
  return {stat, p};
}

// ---------------------------------------------------------------------------
// Report emission
// ---------------------------------------------------------------------------

namespace {

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", x);
  return buf;
}

std::string cell_tag(const CellReport& c) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%s_lam%.6g_tau%.6g", noise_name(c.noise).c_str(), c.lambda,
                c.tau);
  return buf;
}

void write_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("emit_report: cannot open " + path.string());
  out << body;
  if (!out) throw Error("emit_report: write failed for " + path.string());
}

std::string svg_histogram(const std::vector<double>& values) {
  constexpr int kBins = 30;
  constexpr double kLo = -4.0, kHi = 4.0;
  constexpr int kW = 480, kH = 320, kPad = 30;
  std::vector<int> counts(kBins, 0);
  for (double v : values) {
    if (v < kLo || v >= kHi) continue;
    ++counts[static_cast<int>((v - kLo) / (kHi - kLo) * kBins)];
  }
  const int peak = std::max(1, *std::max_element(counts.begin(), counts.end()));
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(kW) +
                  "\" height=\"" + std::to_string(kH) + "\">\n";
  const double bw = static_cast<double>(kW - 2 * kPad) / kBins;
  for (int b = 0; b < kBins; ++b) {
    const double frac = static_cast<double>(counts[b]) / peak;
    const double bh = frac * (kH - 2 * kPad);
    s += "<rect x=\"" + fmt(kPad + b * bw) + "\" y=\"" + fmt(kH - kPad - bh) + "\" width=\"" +
         fmt(bw) + "\" height=\"" + fmt(bh) + "\" fill=\"steelblue\" stroke=\"white\"/>\n";
  }
  s += "<line x1=\"" + std::to_string(kPad) + "\" y1=\"" + std::to_string(kH - kPad) + "\" x2=\"" +
       std::to_string(kW - kPad) + "\" y2=\"" + std::to_string(kH - kPad) +
       "\" stroke=\"black\"/>\n</svg>\n";
  return s;
}

std::string svg_qq(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size();
  constexpr int kW = 480, kH = 480, kPad = 30;
  const double lim = 4.0;
  auto px = [&](double v) { return kPad + (std::clamp(v, -lim, lim) + lim) / (2 * lim) * (kW - 2 * kPad); };
  auto py = [&](double v) { return kH - kPad - (std::clamp(v, -lim, lim) + lim) / (2 * lim) * (kH - 2 * kPad); };
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(kW) +
                  "\" height=\"" + std::to_string(kH) + "\">\n";
  // diagonal reference line y = x
  s += "<line x1=\"" + fmt(px(-lim)) + "\" y1=\"" + fmt(py(-lim)) + "\" x2=\"" + fmt(px(lim)) +
       "\" y2=\"" + fmt(py(lim)) + "\" stroke=\"red\" stroke-width=\"1.5\"/>\n";
  for (std::size_t i = 0; i < m; ++i) {
    const double theo = normal_quantile((static_cast<double>(i) + 0.5) / static_cast<double>(m));
    s += "<circle cx=\"" + fmt(px(theo)) + "\" cy=\"" + fmt(py(values[i])) +
         "\" r=\"1.5\" fill=\"black\"/>\n";
  }
  s += "</svg>\n";
  return s;
}

}  // namespace

void emit_report(const std::vector<CellReport>& cells, const std::string& out_dir) {
  if (cells.empty()) throw Error("emit_report: no cells to write");
  for (const CellReport& c : cells) {
    if (c.z_scores.empty()) {
      throw Error("emit_report: cell " + cell_tag(c) + " has an empty z-score array");
    }
  }
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path dir(out_dir);

  std::string summary =
      "noise,lambda,tau,reps,failures,degenerate,pinv_uses,not_converged,"
      "mean_n_hat,sd_n_hat,se_n_hat,mean_df,sd_df,se_df,mean_active,sd_active,se_active,"
      "mean_sqrt_vn,sd_sqrt_vn,se_sqrt_vn,ks_stat,ks_p,coverage,max_identity_err\n";
  for (const CellReport& c : cells) {
    const double root = std::sqrt(static_cast<double>(c.z_scores.size()));
    summary += noise_name(c.noise) + "," + fmt(c.lambda) + "," + fmt(c.tau) + "," +
               std::to_string(c.reps) + "," + std::to_string(c.failures) + "," +
               std::to_string(c.degenerate) + "," + std::to_string(c.pseudo_inverse_uses) + "," +
               std::to_string(c.not_converged) + "," + fmt(c.mean_n_hat) + "," + fmt(c.sd_n_hat) +
               "," + fmt(c.sd_n_hat / root) + "," + fmt(c.mean_df) + "," + fmt(c.sd_df) + "," +
               fmt(c.sd_df / root) + "," + fmt(c.mean_active) + "," + fmt(c.sd_active) + "," +
               fmt(c.sd_active / root) + "," + fmt(c.mean_sqrt_vn) + "," + fmt(c.sd_sqrt_vn) + "," +
               fmt(c.sd_sqrt_vn / root) + "," + fmt(c.ks_stat) + "," + fmt(c.ks_p) + "," +
               fmt(c.coverage) + "," + fmt(c.max_identity_err) + "\n";
  }
  write_file(dir / "summary.csv", summary);

  std::string box = "noise,lambda,tau,min,whisker_lo,q1,median,q3,whisker_hi,max\n";
  for (const CellReport& c : cells) {
    std::vector<double> v = c.sqrt_vn_values;
    std::sort(v.begin(), v.end());
    const double q1 = sorted_quantile(v, 0.25);
    const double q2 = sorted_quantile(v, 0.5);
    const double q3 = sorted_quantile(v, 0.75);
    const double iqr = q3 - q1;
    // whiskers: most extreme points within 1.5 IQR of the quartiles
    double wlo = q1, whi = q3;
    for (double x : v) {
      if (x >= q1 - 1.5 * iqr) {
        wlo = x;
        break;
      }
    }
    for (auto it = v.rbegin(); it != v.rend(); ++it) {
      if (*it <= q3 + 1.5 * iqr) {
        whi = *it;
        break;
      }
    }
    box += noise_name(c.noise) + "," + fmt(c.lambda) + "," + fmt(c.tau) + "," + fmt(v.front()) +
           "," + fmt(wlo) + "," + fmt(q1) + "," + fmt(q2) + "," + fmt(q3) + "," + fmt(whi) + "," +
           fmt(v.back()) + "\n";
  }
  write_file(dir / "boxplot_data.csv", box);

  for (const CellReport& c : cells) {
    const std::string tag = cell_tag(c);
    std::string json = "{\n  \"noise\": \"" + noise_name(c.noise) + "\",\n  \"lambda\": " +
                       fmt(c.lambda) + ",\n  \"tau\": " + fmt(c.tau) + ",\n  \"z_scores\": [";
    for (std::size_t i = 0; i < c.z_scores.size(); ++i) {
      json += (i ? "," : "") + fmt(c.z_scores[i]);
    }
    json += "]\n}\n";
    write_file(dir / ("zscores_" + tag + ".json"), json);
    write_file(dir / ("hist_" + tag + ".svg"), svg_histogram(c.z_scores));
    write_file(dir / ("qq_" + tag + ".svg"), svg_qq(c.z_scores));
  }
}

}  // namespace robust_debias
