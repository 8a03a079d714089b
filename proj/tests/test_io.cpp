#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "robust_debias/csv.hpp"
#include "robust_debias/errors.hpp"
#include "robust_debias/serialize.hpp"
#include "test_util.hpp"

using namespace robust_debias;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

void write_text(const std::filesystem::path& p, const std::string& body) {
  std::ofstream out(p, std::ios::binary);
  out << body;
}

}  // namespace

TEST_CASE("dataset csv: column order independent") {
  const auto path = temp_file("rd_data1.csv");
  write_text(path, "x2,y,x1\n1.0,2.0,3.0\n4.0,5.0,6.0\n");
  const Dataset ds = read_dataset_csv(path.string());
  CHECK(ds.X.rows() == 2);
  CHECK(ds.X.cols() == 2);
  CHECK(ds.y[0] == 2.0);
  CHECK(ds.X(0, 0) == 3.0);  // x1
  CHECK(ds.X(0, 1) == 1.0);  // x2
  std::filesystem::remove(path);
}

TEST_CASE("dataset csv: malformed rows carry line numbers") {
  const auto path = temp_file("rd_data2.csv");
  write_text(path, "y,x1\n1.0,2.0\n3.0,oops\n");
  try {
    read_dataset_csv(path.string());
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  write_text(path, "y,x1\n1.0\n");
  try {
    read_dataset_csv(path.string());
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  write_text(path, "y,x3\n1.0,2.0\n");
  CHECK_THROWS_AS(read_dataset_csv(path.string()), ParseError);  // missing x1, x2
  std::filesystem::remove(path);
}

TEST_CASE("matrix csv round trip") {
  const auto path = temp_file("rd_mat.csv");
  write_text(path, "1.0,0.25\n0.25,2.0\n");
  const Eigen::MatrixXd M = read_matrix_csv(path.string());
  CHECK(M.rows() == 2);
  CHECK(M(0, 1) == 0.25);
  std::filesystem::remove(path);
}

TEST_CASE("fit json round trip preserves the result") {
  Rng rng(501);
  const Eigen::MatrixXd X = test_util::random_matrix(12, 4, rng);
  const Eigen::VectorXd y = test_util::random_vector(12, rng, 2.0);
  const FitResult f = fit(X, y, RobustLoss::huber(1.5), Penalty::elastic_net(0.2, 0.4));
  const nlohmann::json j = fit_to_json(f);
  const FitResult g = fit_from_json(j);
  CHECK((f.beta_hat - g.beta_hat).norm() == 0.0);
  CHECK((f.psi_vec - g.psi_vec).norm() == 0.0);
  CHECK(f.n_hat == g.n_hat);
  CHECK(f.kkt_residual == g.kkt_residual);
  CHECK(f.loss.name() == g.loss.name());
  CHECK(f.loss.sigma() == g.loss.sigma());
  CHECK(f.penalty.lambda() == g.penalty.lambda());
  CHECK(f.active_set == g.active_set);
}

TEST_CASE("ci csv writer emits 1-based indices and flags") {
  std::vector<InferenceRow> rows(2);
  rows[0].j = 0;
  rows[0].beta_hat = 1.5;
  rows[1].j = 4;
  rows[1].flags = "degenerate_trace";
  const auto path = temp_file("rd_ci.csv");
  write_ci_csv(path.string(), rows);
  std::ifstream in(path);
  std::string header, line1, line2;
  std::getline(in, header);
  std::getline(in, line1);
  std::getline(in, line2);
  CHECK(header == "j,beta_hat,debiased,lo,hi,omega_jj,v_hat,flags");
  CHECK(line1.substr(0, 2) == "1,");
  CHECK(line2.substr(0, 2) == "5,");
  CHECK(line2.find("degenerate_trace") != std::string::npos);
  std::filesystem::remove(path);
}

TEST_CASE("sim config json parsing") {
  const nlohmann::json j = {{"n", 100},       {"p", 150},          {"reps", 50},
                            {"noise", "t2"},  {"sigma_scale", "2p"}, {"seed", 42},
                            {"target_coord", 3}, {"lambda_grid", {0.1, 0.2}}};
  const SimConfig cfg = sim_config_from_json(j);
  CHECK(cfg.n == 100);
  CHECK(cfg.noise == NoiseLaw::student_t2);
  CHECK(cfg.sigma_scale == SigmaScale::over_2p);
  CHECK(cfg.target_coord == 2);  // 1-based in the file
  CHECK(cfg.lambdas() == std::vector<double>{0.1, 0.2});
  CHECK(cfg.taus() == std::vector<double>{0.0, 0.1});

  nlohmann::json bad = j;
  bad["sigma_scale"] = "wat";
  CHECK_THROWS(sim_config_from_json(bad));
}
