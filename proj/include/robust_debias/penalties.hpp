#pragma once

#include <Eigen/Core>
#include <string>

namespace robust_debias {

enum class PenaltyKind { elastic_net, ridge };

// Strongly convex penalty g(b) = lambda ||b||_1 + tau ||b||_2^2 / 2.
// tau > 0 is required at construction; tau = 0 (pure lasso) is only
// reachable through the explicit override used by the simulation harness
// to reproduce the (lambda, 0) table columns.
class Penalty {
public:
  static Penalty elastic_net(double lambda, double tau);
  static Penalty ridge(double tau);
  // Simulation-only escape hatch; accepts tau = 0.
  static Penalty elastic_net_allow_tau_zero(double lambda, double tau);

  double value(const Eigen::VectorXd& b) const;

  // argmin_b ||b - v||^2 / (2t) + g(b): componentwise soft-threshold at
  // t*lambda followed by division by (1 + t*tau).
  Eigen::VectorXd prox(const Eigen::VectorXd& v, double t) const;

  // Distance from u to the subdifferential of g at b (max over coordinates).
  // At b_j = 0 the subdifferential is the interval [-lambda, lambda].
  double kkt_distance(const Eigen::VectorXd& b, const Eigen::VectorXd& u) const;

  // A subgradient of g at b; `zero_pick` in [-1, 1] selects the element of
  // the interval at zero coordinates (used by property tests).
  Eigen::VectorXd subgradient(const Eigen::VectorXd& b, double zero_pick = 0.0) const;

  double lambda() const { return lambda_; }
  double tau() const { return tau_; }
  PenaltyKind kind() const { return kind_; }
  std::string name() const { return kind_ == PenaltyKind::ridge ? "ridge" : "elastic_net"; }

private:
  Penalty(PenaltyKind kind, double lambda, double tau)
      : kind_(kind), lambda_(lambda), tau_(tau) {}

  PenaltyKind kind_;
  double lambda_;
  double tau_;
};

}  // namespace robust_debias
