#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "robust_debias/inference.hpp"

namespace robust_debias {

struct Dataset {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
};

// data.csv: header row naming "y" and "x1".."xp" (any column order), one
// numeric row per observation. Raises ParseError with the offending line.
Dataset read_dataset_csv(const std::string& path);

// Headerless numeric matrix (e.g. a p x p covariance file).
Eigen::MatrixXd read_matrix_csv(const std::string& path);

// ci.csv: j,beta_hat,debiased,lo,hi,omega_jj,v_hat,flags (j is 1-based).
void write_ci_csv(const std::string& path, const std::vector<InferenceRow>& rows);

}  // namespace robust_debias
