#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hqrc/kernels.hpp"
#include "hqrc/pod.hpp"

namespace hqrc::metrics {

/// Pooled RMSE over every column (time step) and the selected rows (cells).
/// `pred` and `truth` are N × T; an empty `rows` span selects all rows.
double rmse(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth, std::span<const Eigen::Index> rows = {},
            kernels::Exec exec = kernels::Exec::kParallel);

/// √⟨(y_true − y_pred)² / σ²⟩ on T × M coefficient series, σ² being the
/// population variance of each truth column over the window.
double rmnse(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth);

/// RMSE between `truth` (N × T) and its projection onto the basis.
double reconstruction_floor(const pod::PodBasis& basis, const Eigen::MatrixXd& truth,
                            std::span<const Eigen::Index> rows = {}, kernels::Exec exec = kernels::Exec::kParallel);

struct EnsembleStats {
  Eigen::MatrixXd mean;
  Eigen::MatrixXd std;  // population
};
EnsembleStats ensemble_average(const std::vector<Eigen::MatrixXd>& members);

struct MetricReport {
  double rmse_grid = 0.0;
  double rmse_region = 0.0;
  double rmnse_modal = 0.0;
  double recon_floor = 0.0;
  int horizon = 0;

  static const std::vector<std::string>& csv_columns();
  std::string csv_row() const;
  std::string to_json() const;
};

}  // namespace hqrc::metrics
