#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "robust_debias/errors.hpp"
#include "robust_debias/rng.hpp"
#include "robust_debias/sim.hpp"
#include "robust_debias/stats.hpp"

using namespace robust_debias;

namespace {

SimConfig small_config() {
  SimConfig cfg;
  cfg.n = 40;
  cfg.p = 30;
  cfg.reps = 60;
  cfg.noise = NoiseLaw::cauchy;
  cfg.seed = 777;
  cfg.threads = 2;
  return cfg;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("gen_instance is deterministic in (seed, rep)") {
  const SimContext ctx = SimContext::make(small_config());
  const Instance a = gen_instance(ctx, 7);
  const Instance b = gen_instance(ctx, 7);
  CHECK((a.X - b.X).norm() == 0.0);
  CHECK((a.y - b.y).norm() == 0.0);
  CHECK((a.beta - b.beta).norm() == 0.0);
  const Instance c = gen_instance(ctx, 8);
  CHECK((a.X - c.X).norm() != 0.0);
}

TEST_CASE("sigma is fixed across reps and SPD") {
  SimConfig cfg = small_config();
  const SimContext ctx1 = SimContext::make(cfg);
  const SimContext ctx2 = SimContext::make(cfg);
  CHECK((ctx1.sigma() - ctx2.sigma()).norm() == 0.0);
  // literal scaling: diagonal is exactly 2p/n
  const double expected_diag = 2.0 * static_cast<double>(cfg.p) / static_cast<double>(cfg.n);
  for (Eigen::Index j = 0; j < cfg.p; ++j) {
    CHECK(ctx1.sigma()(j, j) == doctest::Approx(expected_diag).epsilon(1e-14));
  }
  cfg.sigma_scale = SigmaScale::over_2p;
  const SimContext ctx3 = SimContext::make(cfg);
  for (Eigen::Index j = 0; j < cfg.p; ++j) {
    CHECK(ctx3.sigma()(j, j) == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("row covariance of X matches Sigma (MC smoke test, p = 10)") {
  SimConfig cfg;
  cfg.n = 10000;
  cfg.p = 10;
  cfg.reps = 2;
  cfg.seed = 31;
  const SimContext ctx = SimContext::make(cfg);
  const Instance inst = gen_instance(ctx, 0);
  const double m = static_cast<double>(cfg.n);
  const Eigen::MatrixXd emp = inst.X.transpose() * inst.X / m;
  for (Eigen::Index a = 0; a < cfg.p; ++a) {
    for (Eigen::Index b = a; b < cfg.p; ++b) {
      const double se = std::sqrt((ctx.sigma()(a, a) * ctx.sigma()(b, b) +
                                   ctx.sigma()(a, b) * ctx.sigma()(a, b)) /
                                  m);
      CHECK(std::abs(emp(a, b) - ctx.sigma()(a, b)) <= 4.0 * se);
    }
  }
}

TEST_CASE("cauchy noise: median near zero, heavy tails present") {
  SimConfig cfg = small_config();
  cfg.n = 20000;
  cfg.p = 4;
  const SimContext ctx = SimContext::make(cfg);
  const Instance inst = gen_instance(ctx, 0);
  std::vector<double> eps(inst.eps.data(), inst.eps.data() + inst.eps.size());
  std::sort(eps.begin(), eps.end());
  const double median = eps[eps.size() / 2];
  CHECK(std::abs(median) <= 0.05);  // median of 2e4 Cauchy draws: se ~ pi/(2 sqrt(n))
  CHECK(*std::max_element(eps.begin(), eps.end()) > 20.0);  // tails far beyond a normal
}

TEST_CASE("run_cell smoke: counts reconcile and the pivot identity holds per rep") {
  SimConfig cfg = small_config();
  const SimContext ctx = SimContext::make(cfg);
  const CellReport rep = run_cell(ctx, 1.0 / std::sqrt(40.0), 0.1);
  CHECK(rep.z_scores.size() + rep.failures == rep.reps);
  CHECK(rep.max_identity_err <= 1e-10);
  CHECK(rep.mean_n_hat > 0.0);
  CHECK(rep.mean_active > 0.0);
}

TEST_CASE("run_cell at tau = 0: df equals the active size per rep") {
  SimConfig cfg = small_config();
  cfg.reps = 30;
  const SimContext ctx = SimContext::make(cfg);
  const CellReport rep = run_cell(ctx, 2.0 / std::sqrt(40.0), 0.0);
  REQUIRE(rep.df_values.size() == rep.active_values.size());
  REQUIRE(!rep.df_values.empty());
  for (std::size_t r = 0; r < rep.df_values.size(); ++r) {
    CHECK(std::abs(rep.df_values[r] - rep.active_values[r]) <= 1e-8);
  }
}

TEST_CASE("ks_normal: input validation and degenerate samples") {
  std::vector<double> few(10, 0.1);
  CHECK_THROWS_AS(ks_normal(few), TooFewSamples);
  std::vector<double> constant(400, 0.0);
  CHECK(ks_normal(constant).first >= 0.5);
}

TEST_CASE("ks_normal calibration: true normals rarely exceed 0.0613") {
  int ok = 0;
  const int meta = 100;
  for (int t = 0; t < meta; ++t) {
    Rng rng = Rng::substream(555, static_cast<std::uint64_t>(t));
    std::vector<double> samples(1000);
    for (double& s : samples) s = rng.normal();
    if (ks_normal(samples).first < 0.0613) ++ok;
  }
  CHECK(ok >= 94);
}

TEST_CASE("ks_normal power: mean-shifted normals are rejected at 5%") {
  for (int t = 0; t < 20; ++t) {
    Rng rng = Rng::substream(556, static_cast<std::uint64_t>(t));
    std::vector<double> samples(1000);
    for (double& s : samples) s = 0.5 + rng.normal();
    const auto [stat, p] = ks_normal(samples);
    CHECK(stat > 1.358 / std::sqrt(1000.0));
    CHECK(p < 0.05);
  }
}

TEST_CASE("emit_report: deterministic files, sorted qq, empty input rejected") {
  SimConfig cfg = small_config();
  cfg.reps = 10;
  const SimContext ctx = SimContext::make(cfg);
  CellReport rep = run_cell(ctx, 0.3, 0.1);
  REQUIRE(!rep.z_scores.empty());

  const std::filesystem::path dir1 = std::filesystem::temp_directory_path() / "rd_sim_test1";
  const std::filesystem::path dir2 = std::filesystem::temp_directory_path() / "rd_sim_test2";
  std::filesystem::remove_all(dir1);
  std::filesystem::remove_all(dir2);
  emit_report({rep}, dir1.string());
  emit_report({rep}, dir2.string());
  CHECK(slurp(dir1 / "summary.csv") == slurp(dir2 / "summary.csv"));
  CHECK(slurp(dir1 / "boxplot_data.csv") == slurp(dir2 / "boxplot_data.csv"));
  CHECK(std::filesystem::exists(dir1 / "hist_cauchy_lam0.3_tau0.1.svg"));
  CHECK(std::filesystem::exists(dir1 / "qq_cauchy_lam0.3_tau0.1.svg"));
  CHECK(std::filesystem::exists(dir1 / "zscores_cauchy_lam0.3_tau0.1.json"));

  CellReport empty = rep;
  empty.z_scores.clear();
  const std::filesystem::path dir3 = std::filesystem::temp_directory_path() / "rd_sim_test3";
  std::filesystem::remove_all(dir3);
  CHECK_THROWS_AS(emit_report({empty}, dir3.string()), Error);
  CHECK_FALSE(std::filesystem::exists(dir3 / "summary.csv"));

  std::filesystem::remove_all(dir1);
  std::filesystem::remove_all(dir2);
  std::filesystem::remove_all(dir3);
}

TEST_CASE("boxplot quartiles are ordered") {
  SimConfig cfg = small_config();
  cfg.reps = 40;
  const SimContext ctx = SimContext::make(cfg);
  const CellReport rep = run_cell(ctx, 0.2, 0.1);
  std::vector<double> v = rep.sqrt_vn_values;
  std::sort(v.begin(), v.end());
  const double q1 = sorted_quantile(v, 0.25);
  const double q2 = sorted_quantile(v, 0.5);
  const double q3 = sorted_quantile(v, 0.75);
  CHECK(q1 <= q2);
  CHECK(q2 <= q3);
}
