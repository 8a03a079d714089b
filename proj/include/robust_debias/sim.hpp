#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "robust_debias/inference.hpp"
#include "robust_debias/solver.hpp"

namespace robust_debias {

enum class NoiseLaw { cauchy, student_t2, normal };

// The covariance recipe is Sigma = A^T A / n with A a 2p x p Rademacher
// matrix. over_n is that literal formula (diagonal 2p/n); over_2p rescales to
// A^T A / (2p) (diagonal 1). Both are kept selectable.
enum class SigmaScale { over_n, over_2p };

struct SimConfig {
  Eigen::Index n = 200;
  Eigen::Index p = 300;
  std::size_t reps = 1000;
  NoiseLaw noise = NoiseLaw::cauchy;
  double beta_bernoulli_p = 0.1;
  SigmaScale sigma_scale = SigmaScale::over_n;
  std::vector<double> lambda_grid;  // empty: {n^-1/2, 2 n^-1/2}
  std::vector<double> tau_grid;     // empty: {0, 0.1}
  std::uint64_t seed = 1;
  Eigen::Index target_coord = 0;    // 0-based j
  double huber_sigma = 1.0;
  double ci_level = 0.95;
  SolverOptions solver;
  int threads = 0;

  std::vector<double> lambdas() const;
  std::vector<double> taus() const;
};

// Sigma is generated once from the master seed (substream 0) and shared by
// every replication; per-rep draws use substream (seed, 1 + rep).
class SimContext {
public:
  static SimContext make(const SimConfig& cfg);

  const SimConfig& config() const { return cfg_; }
  const Eigen::MatrixXd& sigma() const { return sigma_; }
  const Eigen::MatrixXd& sigma_chol() const { return sigma_chol_; }
  const PrecisionInfo& precision() const { return precision_; }

private:
  SimContext(SimConfig cfg, Eigen::MatrixXd sigma, Eigen::MatrixXd chol, PrecisionInfo prec)
      : cfg_(std::move(cfg)), sigma_(std::move(sigma)), sigma_chol_(std::move(chol)),
        precision_(std::move(prec)) {}

  SimConfig cfg_;
  Eigen::MatrixXd sigma_;
  Eigen::MatrixXd sigma_chol_;
  PrecisionInfo precision_;
};

struct Instance {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  Eigen::VectorXd beta;
  Eigen::VectorXd eps;
};

// Deterministic in (seed, rep_index): draw order is X rows, then beta, then
// the noise vector.
Instance gen_instance(const SimContext& ctx, std::size_t rep_index);

struct CellReport {
  double lambda = 0.0;
  double tau = 0.0;
  NoiseLaw noise = NoiseLaw::cauchy;
  std::size_t reps = 0;
  std::size_t failures = 0;          // reps excluded from the aggregates
  std::size_t degenerate = 0;        // trace too close to zero
  std::size_t pseudo_inverse_uses = 0;
  std::size_t not_converged = 0;

  // per successful rep, in replication order
  std::vector<double> n_hat_values;
  std::vector<double> df_values;
  std::vector<double> active_values;
  std::vector<double> sqrt_vn_values;  // sqrt(V_hat / n)
  std::vector<double> z_scores;        // Omega_jj^{1/2} xi'_j
  std::vector<char> covered;           // CI covers beta_j
  double max_identity_err = 0.0;       // xi' vs its (n_hat - df) form

  double mean_n_hat = 0.0, sd_n_hat = 0.0;
  double mean_df = 0.0, sd_df = 0.0;
  double mean_active = 0.0, sd_active = 0.0;
  double mean_sqrt_vn = 0.0, sd_sqrt_vn = 0.0;
  double ks_stat = 0.0, ks_p = 0.0;
  double coverage = 0.0;
};

// One (lambda, tau) cell: fit / closed-form trace / V_hat / oracle pivot /
// CI coverage for each replication, aggregated with the unbiased sd.
// Replications run in parallel; per-rep failures are recorded, never fatal.
CellReport run_cell(const SimContext& ctx, double lambda, double tau);

// One-sample KS distance to the standard normal plus the asymptotic p-value.
// Requires at least 50 samples.
std::pair<double, double> ks_normal(std::span<const double> samples);

// summary.csv, zscores_<cell>.json, hist_<cell>.svg, qq_<cell>.svg and
// boxplot_data.csv under out_dir. Refuses to write anything when a cell has
// no z-scores.
void emit_report(const std::vector<CellReport>& cells, const std::string& out_dir);

std::string noise_name(NoiseLaw law);
NoiseLaw noise_from_name(const std::string& name);

}  // namespace robust_debias
