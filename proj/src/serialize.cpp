#include "robust_debias/serialize.hpp"

#include <fstream>

#include "robust_debias/errors.hpp"

namespace robust_debias {

namespace {

nlohmann::json vec_to_json(const Eigen::VectorXd& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Eigen::VectorXd vec_from_json(const nlohmann::json& arr) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = arr[static_cast<std::size_t>(i)].get<double>();
  return v;
}

nlohmann::json solver_options_to_json(const SolverOptions& o) {
  return {{"max_iter", o.max_iter},
          {"kkt_tol", o.kkt_tol},
          {"initial_step", o.initial_step},
          {"backtrack_factor", o.backtrack_factor},
          {"acceleration", o.acceleration}};
}

SolverOptions solver_options_from_json(const nlohmann::json& j) {
  SolverOptions o;
  o.max_iter = j.value("max_iter", o.max_iter);
  o.kkt_tol = j.value("kkt_tol", o.kkt_tol);
  o.initial_step = j.value("initial_step", o.initial_step);
  o.backtrack_factor = j.value("backtrack_factor", o.backtrack_factor);
  o.acceleration = j.value("acceleration", o.acceleration);
  return o;
}

}  // namespace

nlohmann::json fit_to_json(const FitResult& fit) {
  nlohmann::json j;
  j["loss"] = fit.loss.name();
  j["sigma"] = fit.loss.sigma();
  j["penalty"] = fit.penalty.name();
  j["lambda"] = fit.penalty.lambda();
  j["tau"] = fit.penalty.tau();
  j["beta_hat"] = vec_to_json(fit.beta_hat);
  j["residuals"] = vec_to_json(fit.residuals);
  j["psi_vec"] = vec_to_json(fit.psi_vec);
  j["psi_prime_vec"] = vec_to_json(fit.psi_prime_vec);
  nlohmann::json active = nlohmann::json::array();
  for (Eigen::Index idx : fit.active_set) active.push_back(static_cast<long long>(idx));
  j["active_set"] = active;
  j["n_hat"] = fit.n_hat;
  j["kkt_residual"] = fit.kkt_residual;
  j["iterations"] = fit.iterations;
  j["converged"] = fit.converged;
  j["psi_all_zero"] = fit.psi_all_zero;
  j["objective_trace"] = fit.objective_trace;
  return j;
}

FitResult fit_from_json(const nlohmann::json& j) {
  const std::string penalty_name = j.at("penalty").get<std::string>();
  const double lambda = j.at("lambda").get<double>();
  const double tau = j.at("tau").get<double>();
  const Penalty penalty = (penalty_name == "ridge")
                              ? Penalty::ridge(tau)
                              : Penalty::elastic_net_allow_tau_zero(lambda, tau);
  FitResult fit(RobustLoss::from_name(j.at("loss").get<std::string>(), j.at("sigma").get<double>()),
                penalty);
  fit.beta_hat = vec_from_json(j.at("beta_hat"));
  fit.residuals = vec_from_json(j.at("residuals"));
  fit.psi_vec = vec_from_json(j.at("psi_vec"));
  fit.psi_prime_vec = vec_from_json(j.at("psi_prime_vec"));
  for (const auto& idx : j.at("active_set")) {
    fit.active_set.push_back(static_cast<Eigen::Index>(idx.get<long long>()));
  }
  fit.n_hat = j.at("n_hat").get<std::size_t>();
  fit.kkt_residual = j.at("kkt_residual").get<double>();
  fit.iterations = j.value("iterations", 0);
  fit.converged = j.value("converged", true);
  fit.psi_all_zero = j.value("psi_all_zero", false);
  if (j.contains("objective_trace")) {
    fit.objective_trace = j.at("objective_trace").get<std::vector<double>>();
  }
  return fit;
}

nlohmann::json trace_to_json(const TraceReport& report) {
  nlohmann::json j;
  switch (report.method) {
    case TraceMethod::closed_form: j["method"] = "closed_form"; break;
    case TraceMethod::finite_difference: j["method"] = "finite_difference"; break;
    case TraceMethod::hutchinson: j["method"] = "hutchinson"; break;
  }
  j["trace_value"] = report.trace_value;
  j["n_hat"] = report.n_hat;
  j["df"] = report.df;
  j["step"] = report.step;
  j["probes"] = report.probes;
  j["mc_se"] = report.mc_se;
  nlohmann::json skipped = nlohmann::json::array();
  for (Eigen::Index i : report.skipped) skipped.push_back(static_cast<long long>(i));
  j["skipped_coords"] = skipped;
  j["pseudo_inverse_used"] = report.pseudo_inverse_used;
  return j;
}

nlohmann::json stein_to_json(const SteinReport& report) {
  nlohmann::json j;
  switch (report.identity) {
    case SteinIdentity::first_order: j["identity"] = "first_order"; break;
    case SteinIdentity::poincare: j["identity"] = "poincare"; break;
    case SteinIdentity::second_order: j["identity"] = "second_order"; break;
    case SteinIdentity::prop_bounds: j["identity"] = "prop_bounds"; break;
  }
  j["samples"] = report.samples;
  j["seed"] = report.seed;
  j["lhs_estimate"] = report.lhs_estimate;
  j["rhs_estimate"] = report.rhs_estimate;
  j["mc_se_lhs"] = report.mc_se_lhs;
  j["mc_se_rhs"] = report.mc_se_rhs;
  j["mc_se_diff"] = report.mc_se_diff;
  j["pass"] = report.pass;
  if (report.identity == SteinIdentity::second_order) {
    j["ineq_rhs_estimate"] = report.ineq_rhs_estimate;
    j["ineq_pass"] = report.ineq_pass;
  }
  if (report.identity == SteinIdentity::prop_bounds) {
    j["norm_lhs_estimate"] = report.norm_lhs_estimate;
    j["norm_rhs_estimate"] = report.norm_rhs_estimate;
    j["norm_pass"] = report.norm_pass;
    j["rejected"] = report.rejected;
  }
  return j;
}

SimConfig sim_config_from_json(const nlohmann::json& j) {
  SimConfig cfg;
  cfg.n = j.value("n", 200);
  cfg.p = j.value("p", 300);
  cfg.reps = j.value("reps", static_cast<std::size_t>(1000));
  cfg.noise = noise_from_name(j.value("noise", std::string("cauchy")));
  cfg.beta_bernoulli_p = j.value("beta_bernoulli_p", 0.1);
  const std::string design = j.value("sigma_design", std::string("rademacher_gram"));
  if (design != "rademacher_gram") {
    throw std::invalid_argument("sim config: unsupported sigma_design '" + design + "'");
  }
  const std::string scale = j.value("sigma_scale", std::string("n"));
  if (scale == "n") {
    cfg.sigma_scale = SigmaScale::over_n;
  } else if (scale == "2p") {
    cfg.sigma_scale = SigmaScale::over_2p;
  } else {
    throw std::invalid_argument("sim config: sigma_scale must be 'n' or '2p'");
  }
  cfg.lambda_grid = j.value("lambda_grid", std::vector<double>{});
  cfg.tau_grid = j.value("tau_grid", std::vector<double>{});
  cfg.seed = j.value("seed", static_cast<std::uint64_t>(1));
  cfg.target_coord = j.value("target_coord", 1) - 1;  // config is 1-based
  cfg.huber_sigma = j.value("sigma", 1.0);
  cfg.ci_level = j.value("level", 0.95);
  cfg.threads = j.value("threads", 0);
  if (j.contains("solver")) cfg.solver = solver_options_from_json(j.at("solver"));
  return cfg;
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << j.dump(2) << "\n";
  if (!out) throw Error("write failed for " + path);
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path, 0);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad JSON in ") + path + ": " + e.what(), 0);
  }
  return j;
}

}  // namespace robust_debias
