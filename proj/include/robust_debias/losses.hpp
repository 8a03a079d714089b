#pragma once

#include <cstddef>
#include <functional>
#include <string>

namespace robust_debias {

enum class LossKind { huber, pseudo_huber, smoothed_huber, one_sided_logistic };

// Robust loss rho with derivative psi and a.e. second derivative psi_prime.
// Each loss carries its Lipschitz constant L for psi and the lower bound
// K^2 <= psi'(x) + psi(x)^2. Immutable; safe to share across threads.
class RobustLoss {
public:
  static RobustLoss huber(double sigma);
  static RobustLoss pseudo_huber(double sigma);
  static RobustLoss smoothed_huber();
  static RobustLoss one_sided_logistic();
  static RobustLoss from_name(const std::string& name, double sigma);

  double rho(double x) const;
  double psi(double x) const;
  // At the Huber kink |x| = sigma this returns the quadratic-branch value 1
  // (left-continuous convention; the kink set has measure zero).
  double psi_prime(double x) const;

  LossKind kind() const { return kind_; }
  double sigma() const { return sigma_; }
  double lipschitz() const { return lipschitz_; }
  double k_sq() const { return k_sq_; }
  bool is_huber() const { return kind_ == LossKind::huber; }
  std::string name() const;

private:
  RobustLoss(LossKind kind, double sigma, double lipschitz, double k_sq)
      : kind_(kind), sigma_(sigma), lipschitz_(lipschitz), k_sq_(k_sq) {}

  LossKind kind_;
  double sigma_;
  double lipschitz_;
  double k_sq_;
};

struct GridSpec {
  double lo;
  double hi;
  std::size_t points;
};

struct AssumptionReport {
  double min_psi2_plus_psi_prime;
  double argmin_x;
  double max_lipschitz_ratio;
  bool k_violated;
  bool lipschitz_violated;
};

// Grid-based verification of the loss assumption for arbitrary (psi, psi')
// pairs; used both for shipped losses and for negative test fixtures.
// Throws AssumptionViolated when the empirical minimum of psi' + psi^2
// undercuts the declared k_sq by more than 1e-9.
AssumptionReport check_psi_grid(const std::function<double(double)>& psi,
                                const std::function<double(double)>& psi_prime,
                                double k_sq, double lipschitz, const GridSpec& grid);

// Same check for a shipped loss; the grid must cover [-10 sigma, 10 sigma]
// with at least 1e4 points.
AssumptionReport check_assumption_rho(const RobustLoss& loss, const GridSpec& grid);
AssumptionReport check_assumption_rho(const RobustLoss& loss);

}  // namespace robust_debias
