#include "hqrc/esn.hpp"

#include <Eigen/Eigenvalues>
#include <vector>

#include "hqrc/errors.hpp"
#include "hqrc/rng.hpp"

namespace hqrc::esn {

using Eigen::Index;

void EsnConfig::validate() const {
  if (units < 1) throw DomainError("ESN needs at least one unit");
  if (degree < 1 || degree > units) throw DomainError("ESN degree must lie in [1, units]");
  if (!(radius > 0.0 && radius <= 1.0)) throw DomainError("ESN spectral radius must lie in (0, 1]");
  if (!(input_scale >= 0.0)) throw DomainError("ESN input scale must be non-negative");
  if (!(beta >= 0.0)) throw DomainError("ESN ridge parameter must be non-negative");
}

double spectral_radius(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
  if (es.info() != Eigen::Success) throw NumericError("eigenvalue solve failed while measuring spectral radius");
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

EchoStateNetwork::EchoStateNetwork(const EsnConfig& config, int n_in) : config_(config) {
  config.validate();
  if (n_in < 1) throw DomainError("ESN needs at least one input");
  const int n = config.units;
  const double p = static_cast<double>(config.degree) / n;
  Pcg32 rng(config.seed, streams::kEsn);

  Eigen::MatrixXd dense(n, n);
  double rho = 0.0;
  // A draw with no cycles has spectral radius zero and cannot be rescaled;
  // continuing the stream gives a fresh draw.
  for (int attempt = 0; attempt < 64 && rho == 0.0; ++attempt) {
    dense.setZero();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (rng.uniform01() < p) dense(i, j) = rng.uniform(-1.0, 1.0);
    rho = spectral_radius(dense);
  }
  if (rho == 0.0) throw NumericError("could not draw a recurrent matrix with non-zero spectral radius");
  dense *= config.radius / rho;
  w_rec_ = dense.sparseView(0.0, 0.0);
  w_rec_.makeCompressed();

  w_in_.resize(n, n_in);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n_in; ++j) w_in_(i, j) = rng.uniform(-config.input_scale, config.input_scale);
  h_ = Eigen::VectorXd::Zero(n);
}

EchoStateNetwork::EchoStateNetwork(SparseRowMatrix w_rec, Eigen::MatrixXd w_in)
    : w_rec_(std::move(w_rec)), w_in_(std::move(w_in)) {
  if (w_rec_.rows() != w_rec_.cols() || w_rec_.rows() != w_in_.rows() || w_in_.cols() < 1) {
    throw DomainError("ESN weight shapes are inconsistent");
  }
  config_.units = static_cast<int>(w_rec_.rows());
  h_ = Eigen::VectorXd::Zero(w_rec_.rows());
}

void EchoStateNetwork::set_h(const Eigen::VectorXd& h) {
  if (h.size() != h_.size()) throw DomainError("ESN state has the wrong length");
  h_ = h;
}

const Eigen::VectorXd& EchoStateNetwork::step(const Eigen::VectorXd& u) {
  if (u.size() != w_in_.cols()) throw DomainError("ESN input has the wrong length");
  h_ = (w_rec_ * h_ + w_in_ * u).array().tanh().matrix();
  return h_;
}

}  // namespace hqrc::esn
