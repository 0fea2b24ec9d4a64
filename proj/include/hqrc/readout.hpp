#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace hqrc::readout {

/// Row-accumulated design matrix with the constant bias column first.
class TrainingMatrix {
 public:
  TrainingMatrix(Eigen::Index n_features, Eigen::Index n_outputs, Eigen::Index capacity = 0);

  void add_row(const Eigen::VectorXd& features, const Eigen::VectorXd& target);

  Eigen::Index rows() const { return rows_; }
  /// K × (n_features + 1), column 0 all ones.
  Eigen::MatrixXd x() const { return x_.topRows(rows_); }
  Eigen::MatrixXd y() const { return y_.topRows(rows_); }

 private:
  Eigen::MatrixXd x_;
  Eigen::MatrixXd y_;
  Eigen::Index rows_ = 0;
};

/// Linear readout ŷ = wᵀ [1; z]. Row 0 of `w` is the bias.
struct ReadoutWeights {
  Eigen::MatrixXd w;  // (n_features + 1) × n_outputs
  double beta = 0.0;
  /// Column l copies the column of the input component feeding reservoir l.
  std::optional<Eigen::MatrixXd> replicated;

  bool trained() const { return w.size() > 0; }
  Eigen::Index n_features() const { return w.rows() - 1; }
  Eigen::Index n_outputs() const { return w.cols(); }

  /// Binary layout, all little-endian:
  ///   "HQRW" | u32 version=1 | u64 rows | u64 cols | f64 beta | u64 replicated_cols
  ///   | rows×cols f64 row-major | rows×replicated_cols f64 row-major
  std::vector<std::uint8_t> to_bytes() const;
  static ReadoutWeights from_bytes(std::span<const std::uint8_t> bytes);
  void save(const std::filesystem::path& path) const;
  static ReadoutWeights load(const std::filesystem::path& path);
};

/// Solves (XᵀX + βI) w = Xᵀŷ. One factorization serves all output columns;
/// the bias row is regularized along with the rest.
ReadoutWeights ridge_fit(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double beta);
inline ReadoutWeights ridge_fit(const TrainingMatrix& m, double beta) { return ridge_fit(m.x(), m.y(), beta); }

/// ‖(XᵀX + βI) w − Xᵀŷ‖ / ‖Xᵀŷ‖ for a fitted weight matrix.
double normal_equation_residual(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double beta,
                                const Eigen::MatrixXd& w);

/// Elementwise clamp into [0, 1]. NaN is rejected, never clipped.
Eigen::VectorXd clip_unit(const Eigen::VectorXd& x);

/// wᵀ [1; z] without clipping.
Eigen::VectorXd apply(const ReadoutWeights& weights, const Eigen::VectorXd& z);
/// clip_unit(wᵀ [1; z]).
Eigen::VectorXd predict(const ReadoutWeights& weights, const Eigen::VectorXd& z);
/// W′ᵀ [1; z] using the replicated weights, unclipped.
Eigen::VectorXd apply_replicated(const ReadoutWeights& weights, const Eigen::VectorXd& z);

ReadoutWeights replicate_weights(const ReadoutWeights& weights, std::span<const int> tiling);

}  // namespace hqrc::readout
