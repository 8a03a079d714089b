#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <optional>

#include "robust_debias/rng.hpp"
#include "robust_debias/solver.hpp"

namespace robust_debias {

// Vector field on the sphere S^{n-1}(R), evaluated through the radial
// extension f(R x / ||x||). The optional hint-aware evaluator lets expensive
// fields (a solver fit per evaluation) warm-start the 2n Jacobian probes from
// the base-point solution; hints never change certified results.
class SphereField {
public:
  using Eval = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
  using EvalWithHint = std::function<Eigen::VectorXd(
      const Eigen::VectorXd& point, const Eigen::VectorXd* warm_hint, Eigen::VectorXd* state_out)>;

  SphereField(Eigen::Index n, double radius, Eval eval);
  SphereField(Eigen::Index n, double radius, EvalWithHint eval);

  Eigen::Index dim() const { return n_; }
  double radius() const { return radius_; }

  // Projects onto the sphere, evaluates, and validates finiteness.
  Eigen::VectorXd operator()(const Eigen::VectorXd& x) const;
  Eigen::VectorXd eval_with_hint(const Eigen::VectorXd& x, const Eigen::VectorXd* hint,
                                 Eigen::VectorXd* state_out) const;

private:
  Eigen::Index n_;
  double radius_;
  EvalWithHint eval_;
};

SphereField make_identity_field(Eigen::Index n, double radius);
SphereField make_linear_field(Eigen::MatrixXd A, double radius);
// f_norm(x) = f(x) / ||f(x)||; evaluations with ||f|| < 1e-12 raise ZeroPsi.
SphereField make_normalized_field(const SphereField& raw);

// A frozen regression problem whose score vector psi is viewed as a function
// of one design column; sampling that column on a fixed-radius sphere matches
// the conditioning used in the normality argument.
struct PsiPluginConfig {
  Eigen::Index n = 50;
  Eigen::Index p = 8;
  Eigen::Index column = 0;
  double lambda = 0.1;
  double tau = 0.7;
  double huber_sigma = 1.0;
  double radius = 1.0;
  std::uint64_t seed = 1;
  SolverOptions solver{.max_iter = 50000, .kkt_tol = 1e-11};
};
SphereField make_psi_plugin_field(const PsiPluginConfig& cfg);

// R zeta / ||zeta|| with zeta standard normal; requires n >= 3.
Eigen::VectorXd sample_sphere(Eigen::Index n, double radius, Rng& rng);

// Central-difference Jacobian of the radial extension, returned as the
// matrix [d f_i / d x_k]_{ik} (i.e. grad f(z)^T). step = 0 picks 1e-5 R.
Eigen::MatrixXd tangential_jacobian(const SphereField& field, const Eigen::VectorXd& z,
                                    double step = 0.0);

enum class SteinIdentity { first_order, poincare, second_order, prop_bounds };

struct SteinReport {
  SteinIdentity identity = SteinIdentity::first_order;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  double lhs_estimate = 0.0;
  double rhs_estimate = 0.0;
  double mc_se_lhs = 0.0;
  double mc_se_rhs = 0.0;
  double mc_se_diff = 0.0;    // SE of the per-sample lhs-rhs difference
  bool pass = false;
  // second_order only: the Cauchy-Schwarz inequality companion.
  double ineq_rhs_estimate = 0.0;
  bool ineq_pass = true;
  // prop_bounds only: the second displayed inequality.
  double norm_lhs_estimate = 0.0;
  double norm_rhs_estimate = 0.0;
  bool norm_pass = true;
  std::size_t rejected = 0;   // samples rejected by the ||f|| != 0 guard
};

struct SteinRunRequest {
  bool first_order = false;
  bool poincare = false;
  bool second_order = false;
  bool bounds = false;  // normalized-field bounds (needs the raw field)
};

struct SteinRunResult {
  std::optional<SteinReport> first_order;
  std::optional<SteinReport> poincare;
  std::optional<SteinReport> second_order;
  std::optional<SteinReport> bounds;
};

// Shared Monte-Carlo driver: one sweep of (2n+1) field evaluations per sample
// serves every requested identity. Sample s draws from substream (seed, s),
// so results are independent of the thread schedule; all pass/fail rules are
// stated in MC standard-error units (3 combined SEs).
SteinRunResult stein_run(const SphereField& field, std::size_t samples, std::uint64_t seed,
                         const SteinRunRequest& request, double step = 0.0, int threads = 1);

SteinReport check_first_order(const SphereField& field, std::size_t samples, std::uint64_t seed,
                              double step = 0.0, int threads = 1);
SteinReport check_poincare(const SphereField& field, std::size_t samples, std::uint64_t seed,
                           double step = 0.0, int threads = 1);
SteinReport check_second_order(const SphereField& field, std::size_t samples, std::uint64_t seed,
                               double step = 0.0, int threads = 1);
SteinReport check_normalized_bounds(const SphereField& raw_field, std::size_t samples,
                                    std::uint64_t seed, double step = 0.0, int threads = 1);

}  // namespace robust_debias
