#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "hqrc/kernels.hpp"

namespace hqrc::pod {

/// Mean snapshot plus M orthonormal spatial modes.
struct PodBasis {
  Eigen::VectorXd mean;         // N
  Eigen::MatrixXd modes;        // N × M
  Eigen::VectorXd eigenvalues;  // M, descending

  Eigen::Index n_points() const { return modes.rows(); }
  Eigen::Index n_modes() const { return modes.cols(); }
};

/// Per-mode min/max scaling fitted on training coefficients only.
class MinMaxScaler {
 public:
  MinMaxScaler() = default;
  MinMaxScaler(Eigen::VectorXd min, Eigen::VectorXd max);

  /// Fits on a T × M coefficient matrix.
  static MinMaxScaler fit(const Eigen::MatrixXd& coeffs);

  bool fitted() const { return min_.size() > 0; }
  const Eigen::VectorXd& min() const { return min_; }
  const Eigen::VectorXd& max() const { return max_; }

  /// (a − min)/(max − min) per column; a degenerate mode maps to 0.5.
  /// Values outside the training range pass through unclipped.
  Eigen::MatrixXd scale(const Eigen::MatrixXd& coeffs) const;
  Eigen::MatrixXd unscale(const Eigen::MatrixXd& scaled) const;
  Eigen::VectorXd scale(const Eigen::VectorXd& coeffs) const;
  Eigen::VectorXd unscale(const Eigen::VectorXd& scaled) const;

 private:
  void require_fitted(Eigen::Index m) const;

  Eigen::VectorXd min_;
  Eigen::VectorXd max_;
};

struct ModalSeries {
  Eigen::MatrixXd coeffs;  // T × M, unscaled a_j(t)
  MinMaxScaler scaler;
};

struct PodFit {
  PodBasis basis;
  ModalSeries series;
  /// Every eigenvalue of SᵀS (clamped at 0), descending; the discarded tail
  /// sums to the projection residual.
  Eigen::VectorXd spectrum;
};

/// Method of snapshots on raw N × T data: mean-subtract, eigendecompose SᵀS,
/// lift to spatial modes, fix each mode's sign so its largest-magnitude
/// component is positive, then project.
PodFit fit_pod(const Eigen::MatrixXd& data, int n_modes, kernels::Exec exec = kernels::Exec::kParallel);

/// a = Vᵀ(d − mean).
Eigen::VectorXd project(const PodBasis& basis, const Eigen::VectorXd& snapshot);
/// Columns of N × T data → T × M coefficients.
Eigen::MatrixXd project_all(const PodBasis& basis, const Eigen::MatrixXd& data,
                            kernels::Exec exec = kernels::Exec::kParallel);

/// mean + Σ a_j v_j.
Eigen::VectorXd reconstruct(const PodBasis& basis, const Eigen::VectorXd& coeffs);
/// T × M coefficients → N × T snapshots.
Eigen::MatrixXd reconstruct_all(const PodBasis& basis, const Eigen::MatrixXd& coeffs,
                                kernels::Exec exec = kernels::Exec::kParallel);

/// Keeps the leading `n_modes` modes.
PodBasis truncate(const PodBasis& basis, int n_modes);

/// Basis plus the training scaler, as persisted between runs.
struct PodModel {
  PodBasis basis;
  MinMaxScaler scaler;

  /// "HQPD" | u32 version=1 | u64 n_points | u64 n_modes | u64 has_scaler
  /// | mean (N) | modes (N×M row-major) | eigenvalues (M) | [scaler_min (M) | scaler_max (M)]
  /// All numbers little-endian; floats are f64.
  std::vector<std::uint8_t> to_bytes() const;
  static PodModel from_bytes(std::span<const std::uint8_t> bytes);
  void save(const std::filesystem::path& path) const;
  static PodModel load(const std::filesystem::path& path);
};

}  // namespace hqrc::pod
