#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <cstdint>

namespace hqrc::esn {

struct EsnConfig {
  int units = 60;
  /// Expected nonzeros per row of the recurrent matrix.
  int degree = 10;
  double radius = 0.9;
  double input_scale = 1.0;
  double beta = 1e-5;
  std::uint64_t seed = 0;

  void validate() const;
};

using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Non-leaky tanh echo state network: h ← tanh(W h + W_in u).
class EchoStateNetwork {
 public:
  EchoStateNetwork(const EsnConfig& config, int n_in);
  /// Explicit weights, mainly for tests.
  EchoStateNetwork(SparseRowMatrix w_rec, Eigen::MatrixXd w_in);

  const EsnConfig& config() const { return config_; }
  int units() const { return static_cast<int>(h_.size()); }
  int n_in() const { return static_cast<int>(w_in_.cols()); }
  const SparseRowMatrix& w_rec() const { return w_rec_; }
  const Eigen::MatrixXd& w_in() const { return w_in_; }
  const Eigen::VectorXd& h() const { return h_; }
  void set_h(const Eigen::VectorXd& h);

  const Eigen::VectorXd& step(const Eigen::VectorXd& u);
  void reset() { h_.setZero(); }

 private:
  EsnConfig config_;
  SparseRowMatrix w_rec_;
  Eigen::MatrixXd w_in_;
  Eigen::VectorXd h_;
};

/// Largest eigenvalue modulus from a dense eigendecomposition.
double spectral_radius(const Eigen::MatrixXd& m);

}  // namespace hqrc::esn
