#include "robust_debias/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "robust_debias/errors.hpp"

namespace robust_debias {

namespace {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// K^2 for the scaled pseudo-Huber: minimum over t in (0,1] of
// t^{3/2} + sigma^2 (1 - t) with t = 1/(1 + (x/sigma)^2).
double pseudo_huber_k_sq(double sigma) {
  const double s2 = sigma * sigma;
  if (s2 > 1.5) return 1.0;  // interior stationary point leaves (0,1]
  return s2 - 4.0 * s2 * s2 * s2 / 27.0;
}

}  // namespace

RobustLoss RobustLoss::huber(double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("huber: sigma must be positive");
  return RobustLoss(LossKind::huber, sigma, 1.0, std::min(1.0, sigma * sigma));
}

RobustLoss RobustLoss::pseudo_huber(double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("pseudo_huber: sigma must be positive");
  return RobustLoss(LossKind::pseudo_huber, sigma, 1.0, pseudo_huber_k_sq(sigma));
}

RobustLoss RobustLoss::smoothed_huber() {
  return RobustLoss(LossKind::smoothed_huber, 1.0, 1.0, 1.0);
}

RobustLoss RobustLoss::one_sided_logistic() {
  // psi' + psi^2 = sigmoid(x), so the declared bound is the value at the
  // left edge of the default probe grid [-10, 10].
  return RobustLoss(LossKind::one_sided_logistic, 1.0, 0.25, sigmoid(-10.0));
}

RobustLoss RobustLoss::from_name(const std::string& name, double sigma) {
  if (name == "huber") return huber(sigma);
  if (name == "pseudo_huber") return pseudo_huber(sigma);
  if (name == "smoothed_huber") return smoothed_huber();
  if (name == "logistic1") return one_sided_logistic();
  throw std::invalid_argument("unknown loss: " + name);
}

std::string RobustLoss::name() const {
  switch (kind_) {
    case LossKind::huber: return "huber";
    case LossKind::pseudo_huber: return "pseudo_huber";
    case LossKind::smoothed_huber: return "smoothed_huber";
    case LossKind::one_sided_logistic: return "logistic1";
  }
  return "?";
}

double RobustLoss::rho(double x) const {
  switch (kind_) {
    case LossKind::huber: {
      const double u = std::abs(x) / sigma_;
      const double h = (u <= 1.0) ? 0.5 * u * u : u - 0.5;
      return sigma_ * sigma_ * h;
    }
    case LossKind::pseudo_huber: {
      const double u = x / sigma_;
      return sigma_ * sigma_ * (std::sqrt(1.0 + u * u) - 1.0);
    }
    case LossKind::smoothed_huber: {
      const double a = std::abs(x);
      if (a <= 1.0) return 0.5 * x * x;
      if (a < 2.0) return 1.0 / 6.0 - 0.5 * a + x * x - a * a * a / 6.0;
      return -7.0 / 6.0 + 1.5 * a;
    }
    case LossKind::one_sided_logistic: {
      // log(1 + e^x), overflow-safe.
      return (x > 0.0) ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
    }
  }
  return 0.0;
}

double RobustLoss::psi(double x) const {
  switch (kind_) {
    case LossKind::huber:
      return std::clamp(x, -sigma_, sigma_);
    case LossKind::pseudo_huber: {
      const double u = x / sigma_;
      return x / std::sqrt(1.0 + u * u);
    }
    case LossKind::smoothed_huber: {
      const double a = std::abs(x);
      const double s = (x < 0.0) ? -1.0 : 1.0;
      if (a <= 1.0) return x;
      if (a < 2.0) return s * (-0.5 + 2.0 * a - 0.5 * a * a);
      return s * 1.5;
    }
    case LossKind::one_sided_logistic:
      return sigmoid(x);
  }
  return 0.0;
}

double RobustLoss::psi_prime(double x) const {
  switch (kind_) {
    case LossKind::huber:
      return (std::abs(x) <= sigma_) ? 1.0 : 0.0;
    case LossKind::pseudo_huber: {
      const double u = x / sigma_;
      const double t = 1.0 / (1.0 + u * u);
      return t * std::sqrt(t);
    }
    case LossKind::smoothed_huber: {
      const double a = std::abs(x);
      if (a <= 1.0) return 1.0;
      if (a < 2.0) return 2.0 - a;
      return 0.0;
    }
    case LossKind::one_sided_logistic: {
      const double s = sigmoid(x);
      return s * (1.0 - s);
    }
  }
  return 0.0;
}

AssumptionReport check_psi_grid(const std::function<double(double)>& psi,
                                const std::function<double(double)>& psi_prime,
                                double k_sq, double lipschitz, const GridSpec& grid) {
  if (grid.points < 2 || !(grid.hi > grid.lo)) {
    throw std::invalid_argument("check_psi_grid: degenerate grid");
  }
  const double step = (grid.hi - grid.lo) / static_cast<double>(grid.points - 1);
  double min_val = std::numeric_limits<double>::infinity();
  double argmin = grid.lo;
  double max_ratio = 0.0;
  double prev_psi = psi(grid.lo);
  for (std::size_t i = 0; i < grid.points; ++i) {
    const double x = grid.lo + step * static_cast<double>(i);
    const double p = psi(x);
    const double val = psi_prime(x) + p * p;
    if (val < min_val) {
      min_val = val;
      argmin = x;
    }
    if (i > 0) {
      // psi must be nondecreasing (convexity) and L-Lipschitz on grid pairs.
      if (p < prev_psi - 1e-12) {
        throw AssumptionViolated("psi decreases between grid points near x=" + std::to_string(x));
      }
      max_ratio = std::max(max_ratio, std::abs(p - prev_psi) / step);
    }
    prev_psi = p;
  }
  AssumptionReport report{min_val, argmin, max_ratio,
                          min_val < k_sq - 1e-9,
                          max_ratio > lipschitz * (1.0 + 1e-9) + 1e-12};
  if (report.k_violated) {
    throw AssumptionViolated("empirical min of psi' + psi^2 is " + std::to_string(min_val) +
                             " at x=" + std::to_string(argmin) + ", below declared K^2=" +
                             std::to_string(k_sq));
  }
  return report;
}

AssumptionReport check_assumption_rho(const RobustLoss& loss, const GridSpec& grid) {
  const double s = loss.sigma();
  if (grid.lo > -10.0 * s + 1e-12 || grid.hi < 10.0 * s - 1e-12 || grid.points < 10000) {
    throw std::invalid_argument("check_assumption_rho: grid must cover [-10 sigma, 10 sigma] with >= 1e4 points");
  }
  return check_psi_grid([&](double x) { return loss.psi(x); },
                        [&](double x) { return loss.psi_prime(x); },
                        loss.k_sq(), loss.lipschitz(), grid);
}

AssumptionReport check_assumption_rho(const RobustLoss& loss) {
  return check_assumption_rho(loss, GridSpec{-10.0 * loss.sigma(), 10.0 * loss.sigma(), 20001});
}

}  // namespace robust_debias
