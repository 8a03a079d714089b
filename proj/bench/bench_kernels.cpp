// Times the data-parallel kernels against their serial reference path and
// verifies that both produce identical aggregates.

#include <chrono>
#include <cmath>
#include <cstdio>

#include "robust_debias/dof.hpp"
#include "robust_debias/parallel.hpp"
#include "robust_debias/rng.hpp"
#include "robust_debias/sim.hpp"
#include "robust_debias/stein.hpp"

using namespace robust_debias;

namespace {

double seconds(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Eigen::MatrixXd random_matrix(Eigen::Index n, Eigen::Index p, Rng& rng) {
  Eigen::MatrixXd X(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) X(i, j) = rng.normal();
  }
  return X;
}

void row(const char* name, double serial, double parallel, bool identical) {
  std::printf("%-28s %9.3fs %9.3fs %7.2fx   %s\n", name, serial, parallel, serial / parallel,
              identical ? "identical" : "MISMATCH");
}

}  // namespace

int main() {
  const int hw = resolve_threads(0);
  std::printf("threads: serial=1 parallel=%d\n", hw);
  std::printf("%-28s %10s %10s %8s   %s\n", "kernel", "serial", "parallel", "speedup", "outputs");

  {
    SimConfig cfg;
    cfg.n = 120;
    cfg.p = 150;
    cfg.reps = 120;
    cfg.seed = 5;
    cfg.threads = 1;
    SimContext ctx = SimContext::make(cfg);
    auto t0 = std::chrono::steady_clock::now();
    const CellReport a = run_cell(ctx, 0.1, 0.1);
    const double ts = seconds(t0);
    cfg.threads = hw;
    ctx = SimContext::make(cfg);
    t0 = std::chrono::steady_clock::now();
    const CellReport b = run_cell(ctx, 0.1, 0.1);
    const double tp = seconds(t0);
    row("simulation cell", ts, tp,
        a.mean_n_hat == b.mean_n_hat && a.z_scores == b.z_scores);
  }

  {
    Rng rng(6);
    const Eigen::MatrixXd X = random_matrix(80, 30, rng);
    Eigen::VectorXd y(80);
    for (Eigen::Index i = 0; i < 80; ++i) y[i] = rng.normal() * 2.0;
    const RobustLoss loss = RobustLoss::huber(1.0);
    const Penalty pen = Penalty::elastic_net(0.1, 0.5);
    auto t0 = std::chrono::steady_clock::now();
    const TraceReport a = finite_difference_trace(X, y, loss, pen, SolverOptions{}, 0.0, 1);
    const double ts = seconds(t0);
    t0 = std::chrono::steady_clock::now();
    const TraceReport b = finite_difference_trace(X, y, loss, pen, SolverOptions{}, 0.0, hw);
    const double tp = seconds(t0);
    row("finite-difference trace", ts, tp, a.trace_value == b.trace_value);
  }

  {
    PsiPluginConfig cfg;
    cfg.n = 30;
    cfg.p = 6;
    cfg.seed = 7;
    const SphereField field = make_psi_plugin_field(cfg);
    SteinRunRequest req;
    req.first_order = true;
    req.poincare = true;
    req.second_order = true;
    auto t0 = std::chrono::steady_clock::now();
    const SteinRunResult a = stein_run(field, 600, 11, req, 0.0, 1);
    const double ts = seconds(t0);
    t0 = std::chrono::steady_clock::now();
    const SteinRunResult b = stein_run(field, 600, 11, req, 0.0, hw);
    const double tp = seconds(t0);
    row("stein psi plug-in sweep", ts, tp,
        a.first_order->lhs_estimate == b.first_order->lhs_estimate &&
            a.second_order->rhs_estimate == b.second_order->rhs_estimate);
  }

  return 0;
}
