#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

namespace steinsim {

// Sample of (Y_i, X_i) pairs. Each covariate row stores the row-major flattening
// of X_i; dims records the index shape ({d}, {d1,d2}, or {d,d,d,d}).
// responses may be empty (covariate-only data, e.g. for PCA fits).
struct SimDataset {
  Eigen::MatrixXd covariates;  // n x prod(dims)
  Eigen::VectorXd responses;   // n or 0
  std::vector<Eigen::Index> dims;

  Eigen::Index sample_count() const { return covariates.rows(); }
  Eigen::Index ambient_dim() const;
  bool has_responses() const { return responses.size() > 0; }
  void validate() const;  // throws std::invalid_argument on shape mismatch
};

// CSV layout: first line "#dims=d1[,d2[,...]]"; each data row is Y followed by
// the flattened covariates (no Y column when expect_responses is false).
SimDataset read_dataset_csv(const std::string& path, bool expect_responses);
void write_dataset_csv(const std::string& path, const SimDataset& data);

}  // namespace steinsim
