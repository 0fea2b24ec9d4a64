#include "hqrc/kernels.hpp"

#include <complex>

#include "hqrc/errors.hpp"

namespace hqrc::kernels::serial {

using Eigen::Index;

Eigen::MatrixXd gram(const Eigen::MatrixXd& s) {
  const Index n = s.rows();
  const Index t = s.cols();
  Eigen::MatrixXd g(t, t);
  for (Index j = 0; j < t; ++j) {
    for (Index i = 0; i <= j; ++i) {
      double acc = 0.0;
      for (Index k = 0; k < n; ++k) acc += s(k, i) * s(k, j);
      g(i, j) = acc;
      g(j, i) = acc;
    }
  }
  return g;
}

Eigen::MatrixXd project(const Eigen::MatrixXd& modes, const Eigen::VectorXd& mean, const Eigen::MatrixXd& data) {
  if (modes.rows() != data.rows() || mean.size() != data.rows()) throw DomainError("project: dimension mismatch");
  const Index n = data.rows();
  Eigen::MatrixXd a(modes.cols(), data.cols());
  for (Index t = 0; t < data.cols(); ++t) {
    for (Index m = 0; m < modes.cols(); ++m) {
      double acc = 0.0;
      for (Index k = 0; k < n; ++k) acc += modes(k, m) * (data(k, t) - mean(k));
      a(m, t) = acc;
    }
  }
  return a;
}

Eigen::MatrixXd reconstruct(const Eigen::MatrixXd& modes, const Eigen::VectorXd& mean, const Eigen::MatrixXd& coeffs) {
  if (modes.cols() != coeffs.rows() || mean.size() != modes.rows()) {
    throw DomainError("reconstruct: dimension mismatch");
  }
  Eigen::MatrixXd d(modes.rows(), coeffs.cols());
  for (Index t = 0; t < coeffs.cols(); ++t) {
    for (Index k = 0; k < modes.rows(); ++k) {
      double acc = mean(k);
      for (Index m = 0; m < modes.cols(); ++m) acc += modes(k, m) * coeffs(m, t);
      d(k, t) = acc;
    }
  }
  return d;
}

double sum_squared_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, std::span<const Index> rows) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DomainError("sum_squared_diff: shape mismatch");
  double acc = 0.0;
  for (Index t = 0; t < a.cols(); ++t) {
    if (rows.empty()) {
      for (Index k = 0; k < a.rows(); ++k) acc += (a(k, t) - b(k, t)) * (a(k, t) - b(k, t));
    } else {
      for (Index k : rows) acc += (a(k, t) - b(k, t)) * (a(k, t) - b(k, t));
    }
  }
  return acc;
}

Eigen::MatrixXcd conjugate(const Eigen::MatrixXcd& u, const Eigen::MatrixXcd& rho) {
  if (u.rows() != rho.rows() || u.cols() != rho.cols() || u.rows() != u.cols()) {
    throw DomainError("conjugate: dimension mismatch");
  }
  const Index d = u.rows();
  Eigen::MatrixXcd tmp = Eigen::MatrixXcd::Zero(d, d);
  for (Index j = 0; j < d; ++j)
    for (Index k = 0; k < d; ++k)
      for (Index i = 0; i < d; ++i) tmp(i, j) += u(i, k) * rho(k, j);
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(d, d);
  for (Index j = 0; j < d; ++j)
    for (Index k = 0; k < d; ++k)
      for (Index i = 0; i < d; ++i) out(i, j) += tmp(i, k) * std::conj(u(j, k));
  return out;
}

}  // namespace hqrc::kernels::serial
