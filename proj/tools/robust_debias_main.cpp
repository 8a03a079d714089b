// robust-debias: fit / dof / infer / stein-verify / simulate.
// Exit codes: 0 success, 1 usage or input-parse error, 2 numerical failure
// (diagnostic JSON printed to stderr and written next to the output target).

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "robust_debias/csv.hpp"
#include "robust_debias/dof.hpp"
#include "robust_debias/errors.hpp"
#include "robust_debias/inference.hpp"
#include "robust_debias/parallel.hpp"
#include "robust_debias/serialize.hpp"
#include "robust_debias/sim.hpp"
#include "robust_debias/solver.hpp"
#include "robust_debias/stein.hpp"

namespace {

using namespace robust_debias;

struct NumericalFailure {
  std::string command;
  std::string what;
  std::string out_hint;  // directory or file the user asked for
};

void write_error_json(const NumericalFailure& failure) {
  nlohmann::json j{{"command", failure.command}, {"error", failure.what}};
  std::cerr << j.dump(2) << "\n";
  std::filesystem::path dir = std::filesystem::current_path();
  if (!failure.out_hint.empty()) {
    const std::filesystem::path hint(failure.out_hint);
    dir = std::filesystem::is_directory(hint) ? hint : hint.parent_path();
    if (dir.empty()) dir = std::filesystem::current_path();
  }
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  std::ofstream out(dir / "error.json", std::ios::binary);
  if (out) out << j.dump(2) << "\n";
}

std::vector<Eigen::Index> parse_coords(const std::string& spec, Eigen::Index p) {
  std::vector<Eigen::Index> coords;
  if (spec.empty()) {
    for (Eigen::Index j = 0; j < p; ++j) coords.push_back(j);
    return coords;
  }
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    long j = 0;
    try {
      j = std::stol(tok);  // 1-based on the command line
    } catch (const std::exception&) {
      throw ParseError("bad coordinate '" + tok + "'", 0);
    }
    if (j < 1 || j > static_cast<long>(p)) {
      throw ParseError("coordinate " + tok + " out of range 1.." + std::to_string(p), 0);
    }
    coords.push_back(static_cast<Eigen::Index>(j - 1));
  }
  return coords;
}

TraceReport compute_trace(const std::string& method, const FitResult& fit_res,
                          const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double step,
                          int probes, std::uint64_t seed, int threads) {
  if (method == "closed") return huber_enet_trace(fit_res, X);
  if (method == "fd") {
    return finite_difference_trace(X, y, fit_res.loss, fit_res.penalty, SolverOptions{}, step,
                                   threads);
  }
  if (method == "hutch") {
    return hutchinson_trace(X, y, fit_res.loss, fit_res.penalty, SolverOptions{}, probes, seed,
                            step, threads);
  }
  throw std::invalid_argument("--method: expected closed|fd|hutch");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Penalized robust M-estimation with debiased coordinate-wise inference"};
  app.require_subcommand(1);

  // ---- fit ----
  auto* fit_cmd = app.add_subcommand("fit", "fit the penalized M-estimator");
  std::string fit_data, fit_loss = "huber", fit_penalty = "elastic_net", fit_out = "fit.json";
  double fit_sigma = 1.0, fit_lambda = 0.0, fit_tau = 0.0;
  SolverOptions fit_opts;
  fit_cmd->add_option("--data", fit_data, "CSV with columns y, x1..xp")->required();
  fit_cmd->add_option("--loss", fit_loss, "huber|pseudo_huber|smoothed_huber|logistic1");
  fit_cmd->add_option("--sigma", fit_sigma, "loss scale sigma");
  fit_cmd->add_option("--penalty", fit_penalty, "elastic_net|ridge");
  fit_cmd->add_option("--lambda", fit_lambda, "l1 weight");
  fit_cmd->add_option("--tau", fit_tau, "strong convexity constant (> 0)")->required();
  fit_cmd->add_option("--max-iter", fit_opts.max_iter, "iteration cap");
  fit_cmd->add_option("--kkt-tol", fit_opts.kkt_tol, "KKT stopping tolerance");
  fit_cmd->add_option("--out", fit_out, "output JSON path");

  // ---- dof ----
  auto* dof_cmd = app.add_subcommand("dof", "trace of the psi Jacobian / degrees of freedom");
  std::string dof_fit, dof_data, dof_method = "closed", dof_out;
  double dof_step = 0.0;
  int dof_probes = 64, dof_threads = 0;
  std::uint64_t dof_seed = 1;
  dof_cmd->set_help_flag("--help", "print help");  // frees -h/--h for the step size
  dof_cmd->add_option("--fit", dof_fit, "fit.json from the fit subcommand")->required();
  dof_cmd->add_option("--data", dof_data, "the CSV the fit was computed on")->required();
  dof_cmd->add_option("--method", dof_method, "closed|fd|hutch");
  dof_cmd->add_option("--h", dof_step, "finite-difference step (default 1e-4 (1+||y||_inf))");
  dof_cmd->add_option("--probes", dof_probes, "hutchinson probe count");
  dof_cmd->add_option("--seed", dof_seed, "hutchinson probe seed");
  dof_cmd->add_option("--threads", dof_threads, "worker threads (0 = auto)");
  dof_cmd->add_option("--out", dof_out, "output JSON path (default: stdout)");

  // ---- infer ----
  auto* infer_cmd = app.add_subcommand("infer", "debiased estimates and confidence intervals");
  std::string infer_fit, infer_data, infer_sigma_file, coord_spec, infer_out = "ci.csv";
  std::string infer_method = "auto";
  bool assume_identity = false;
  double infer_level = 0.95;
  int infer_threads = 0;
  infer_cmd->add_option("--fit", infer_fit, "fit.json")->required();
  infer_cmd->add_option("--data", infer_data, "data CSV")->required();
  infer_cmd->add_option("--sigma-file", infer_sigma_file, "p x p covariance CSV (no header)");
  infer_cmd->add_flag("--assume-identity", assume_identity, "use Sigma = I instead of a file");
  infer_cmd->add_option("--coords", coord_spec, "1-based coordinate list, e.g. 1,2,5");
  infer_cmd->add_option("--level", infer_level, "confidence level in (0,1)");
  infer_cmd->add_option("--method", infer_method, "trace method: auto|closed|fd");
  infer_cmd->add_option("--threads", infer_threads, "worker threads (0 = auto)");
  infer_cmd->add_option("--out", infer_out, "output CSV path");

  // ---- stein-verify ----
  auto* stein_cmd = app.add_subcommand("stein-verify", "Monte-Carlo sphere identity checks");
  std::string stein_identity = "first", stein_field = "identity", stein_out = "report.json";
  Eigen::Index stein_n = 50;
  double stein_radius = 1.0, stein_step = 0.0;
  std::size_t stein_samples = 10000;
  std::uint64_t stein_seed = 1;
  int stein_threads = 0;
  Eigen::Index plugin_p = 8;
  stein_cmd->add_option("--identity", stein_identity, "first|poincare|second|bounds");
  stein_cmd->add_option("--n", stein_n, "ambient dimension (>= 3)");
  stein_cmd->add_option("--radius", stein_radius, "sphere radius");
  stein_cmd->add_option("--field", stein_field, "identity|linear|psi-plugin");
  stein_cmd->add_option("--samples", stein_samples, "Monte-Carlo samples");
  stein_cmd->add_option("--seed", stein_seed, "sampling seed");
  stein_cmd->add_option("--step", stein_step, "Jacobian step (default 1e-5 R)");
  stein_cmd->add_option("--plugin-p", plugin_p, "plug-in field: number of covariates");
  stein_cmd->add_option("--threads", stein_threads, "worker threads (0 = auto)");
  stein_cmd->add_option("--out", stein_out, "output JSON path");

  // ---- simulate ----
  auto* sim_cmd = app.add_subcommand("simulate", "replicated simulation study");
  std::string sim_config, sim_out_dir = "results";
  sim_cmd->add_option("--config", sim_config, "sim.json configuration")->required();
  sim_cmd->add_option("--out-dir", sim_out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  std::string command, out_hint;
  try {
    if (fit_cmd->parsed()) {
      command = "fit";
      out_hint = fit_out;
      const Dataset ds = read_dataset_csv(fit_data);
      const RobustLoss loss = RobustLoss::from_name(fit_loss, fit_sigma);
      const Penalty penalty = (fit_penalty == "ridge") ? Penalty::ridge(fit_tau)
                                                       : Penalty::elastic_net(fit_lambda, fit_tau);
      const FitResult result = fit(ds.X, ds.y, loss, penalty, fit_opts);
      if (result.psi_all_zero) {
        std::cerr << "warning: psi(y - X beta_hat) is identically zero (degenerate data)\n";
      }
      write_json_file(fit_out, fit_to_json(result));
      std::cout << "converged=" << (result.converged ? "yes" : "no")
                << " iterations=" << result.iterations << " kkt=" << result.kkt_residual
                << " active=" << result.active_size() << " n_hat=" << result.n_hat << "\n";
      if (!result.converged) return 2;
    } else if (dof_cmd->parsed()) {
      command = "dof";
      out_hint = dof_out;
      const Dataset ds = read_dataset_csv(dof_data);
      const FitResult fit_res = fit_from_json(read_json_file(dof_fit));
      const TraceReport rep = compute_trace(dof_method, fit_res, ds.X, ds.y, dof_step, dof_probes,
                                            dof_seed, dof_threads);
      const nlohmann::json j = trace_to_json(rep);
      if (dof_out.empty()) {
        std::cout << j.dump(2) << "\n";
      } else {
        write_json_file(dof_out, j);
      }
    } else if (infer_cmd->parsed()) {
      command = "infer";
      out_hint = infer_out;
      const Dataset ds = read_dataset_csv(infer_data);
      const FitResult fit_res = fit_from_json(read_json_file(infer_fit));
      if (infer_sigma_file.empty() && !assume_identity) {
        std::cerr << "infer: provide --sigma-file or pass --assume-identity\n";
        return 1;
      }
      Eigen::MatrixXd sigma;
      if (assume_identity) {
        sigma = Eigen::MatrixXd::Identity(ds.X.cols(), ds.X.cols());
      } else {
        sigma = read_matrix_csv(infer_sigma_file);
        if (sigma.rows() != ds.X.cols() || sigma.cols() != ds.X.cols()) {
          throw ParseError("sigma file must be p x p with p = " + std::to_string(ds.X.cols()), 0);
        }
      }
      const PrecisionInfo prec(std::move(sigma));
      std::string method = infer_method;
      if (method == "auto") method = fit_res.loss.is_huber() ? "closed" : "fd";
      const TraceReport trace =
          compute_trace(method, fit_res, ds.X, ds.y, 0.0, 64, 1, infer_threads);
      const std::vector<Eigen::Index> coords = parse_coords(coord_spec, ds.X.cols());
      const std::vector<InferenceRow> rows =
          infer_coords(fit_res, ds.X, prec, trace.trace_value, coords, infer_level, infer_threads);
      write_ci_csv(infer_out, rows);
      std::cout << "wrote " << rows.size() << " intervals to " << infer_out << "\n";
    } else if (stein_cmd->parsed()) {
      command = "stein-verify";
      out_hint = stein_out;
      SphereField field = [&]() -> SphereField {
        if (stein_field == "identity") return make_identity_field(stein_n, stein_radius);
        if (stein_field == "linear") {
          Rng rng = Rng::substream(stein_seed, 0xA11CE);
          Eigen::MatrixXd A(stein_n, stein_n);
          for (Eigen::Index i = 0; i < stein_n; ++i) {
            for (Eigen::Index j = 0; j < stein_n; ++j) A(i, j) = rng.normal();
          }
          return make_linear_field(std::move(A), stein_radius);
        }
        if (stein_field == "psi-plugin") {
          PsiPluginConfig cfg;
          cfg.n = stein_n;
          cfg.p = plugin_p;
          cfg.radius = stein_radius;
          cfg.seed = stein_seed;
          return make_psi_plugin_field(cfg);
        }
        throw std::invalid_argument("--field: expected identity|linear|psi-plugin");
      }();

      SteinReport rep;
      if (stein_identity == "first") {
        rep = check_first_order(field, stein_samples, stein_seed, stein_step, stein_threads);
      } else if (stein_identity == "poincare") {
        rep = check_poincare(field, stein_samples, stein_seed, stein_step, stein_threads);
      } else if (stein_identity == "second") {
        rep = check_second_order(field, stein_samples, stein_seed, stein_step, stein_threads);
      } else if (stein_identity == "bounds") {
        rep = check_normalized_bounds(field, stein_samples, stein_seed, stein_step, stein_threads);
      } else {
        throw std::invalid_argument("--identity: expected first|poincare|second|bounds");
      }
      write_json_file(stein_out, stein_to_json(rep));
      std::cout << (rep.pass ? "PASS" : "FAIL") << " lhs=" << rep.lhs_estimate
                << " rhs=" << rep.rhs_estimate << " (report: " << stein_out << ")\n";
      if (!rep.pass) return 2;
    } else if (sim_cmd->parsed()) {
      command = "simulate";
      out_hint = sim_out_dir;
      const SimConfig cfg = sim_config_from_json(read_json_file(sim_config));
      const SimContext ctx = SimContext::make(cfg);
      std::vector<CellReport> cells;
      for (double lambda : cfg.lambdas()) {
        for (double tau : cfg.taus()) {
          cells.push_back(run_cell(ctx, lambda, tau));
          const CellReport& c = cells.back();
          std::cout << "cell lambda=" << lambda << " tau=" << tau << ": n_hat=" << c.mean_n_hat
                    << " df=" << c.mean_df << " |S|=" << c.mean_active
                    << " sqrt(V/n)=" << c.mean_sqrt_vn << " ks=" << c.ks_stat
                    << " coverage=" << c.coverage << " failures=" << c.failures << "\n";
        }
      }
      emit_report(cells, sim_out_dir);
      std::cout << "wrote report files to " << sim_out_dir << "\n";
    }
  } catch (const ParseError& e) {
    std::cerr << command << ": " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << command << ": " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    write_error_json({command, e.what(), out_hint});
    return 2;
  }
  return 0;
}
