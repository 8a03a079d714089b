#include "robust_debias/penalties.hpp"

#include <cmath>
#include <stdexcept>

namespace robust_debias {

Penalty Penalty::elastic_net(double lambda, double tau) {
  if (lambda < 0.0) throw std::invalid_argument("elastic_net: lambda must be >= 0");
  if (!(tau > 0.0)) throw std::invalid_argument("elastic_net: tau must be > 0");
  return Penalty(PenaltyKind::elastic_net, lambda, tau);
}

Penalty Penalty::ridge(double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("ridge: tau must be > 0");
  return Penalty(PenaltyKind::ridge, 0.0, tau);
}

Penalty Penalty::elastic_net_allow_tau_zero(double lambda, double tau) {
  if (lambda < 0.0 || tau < 0.0) throw std::invalid_argument("elastic_net: negative parameter");
  return Penalty(PenaltyKind::elastic_net, lambda, tau);
}

double Penalty::value(const Eigen::VectorXd& b) const {
  return lambda_ * b.lpNorm<1>() + 0.5 * tau_ * b.squaredNorm();
}

Eigen::VectorXd Penalty::prox(const Eigen::VectorXd& v, double t) const {
  if (!(t > 0.0)) throw std::invalid_argument("prox: step must be > 0");
  const double thresh = t * lambda_;
  const double scale = 1.0 / (1.0 + t * tau_);
  Eigen::VectorXd out(v.size());
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    const double a = std::abs(v[j]) - thresh;
    out[j] = (a > 0.0) ? scale * ((v[j] > 0.0) ? a : -a) : 0.0;
  }
  return out;
}

double Penalty::kkt_distance(const Eigen::VectorXd& b, const Eigen::VectorXd& u) const {
  double dist = 0.0;
  for (Eigen::Index j = 0; j < b.size(); ++j) {
    double r;
    if (b[j] != 0.0) {
      const double sign = (b[j] > 0.0) ? 1.0 : -1.0;
      r = std::abs(u[j] - lambda_ * sign - tau_ * b[j]);
    } else {
      r = std::max(std::abs(u[j]) - lambda_, 0.0);
    }
    if (r > dist) dist = r;
  }
  return dist;
}

Eigen::VectorXd Penalty::subgradient(const Eigen::VectorXd& b, double zero_pick) const {
  Eigen::VectorXd g(b.size());
  for (Eigen::Index j = 0; j < b.size(); ++j) {
    const double s = (b[j] > 0.0) ? 1.0 : (b[j] < 0.0 ? -1.0 : zero_pick);
    g[j] = lambda_ * s + tau_ * b[j];
  }
  return g;
}

}  // namespace robust_debias
