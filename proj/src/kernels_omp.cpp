#include "hqrc/kernels.hpp"

#include <vector>

#include "hqrc/errors.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace hqrc::kernels {

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace omp {

using Eigen::Index;

namespace {
// Below this many output columns the fork/join cost dominates.
constexpr Index kMinParallelCols = 16;
}  // namespace

Eigen::MatrixXd gram(const Eigen::MatrixXd& s) {
  const Index t = s.cols();
  Eigen::MatrixXd g(t, t);
#pragma omp parallel for schedule(dynamic, 4) if (t >= kMinParallelCols)
  for (Index j = 0; j < t; ++j) {
    for (Index i = 0; i <= j; ++i) {
      const double v = s.col(i).dot(s.col(j));
      g(i, j) = v;
      g(j, i) = v;
    }
  }
  return g;
}

Eigen::MatrixXd project(const Eigen::MatrixXd& modes, const Eigen::VectorXd& mean, const Eigen::MatrixXd& data) {
  if (modes.rows() != data.rows() || mean.size() != data.rows()) throw DomainError("project: dimension mismatch");
  Eigen::MatrixXd a(modes.cols(), data.cols());
#pragma omp parallel for schedule(static) if (data.cols() >= kMinParallelCols)
  for (Index t = 0; t < data.cols(); ++t) {
    const Eigen::VectorXd centered = data.col(t) - mean;
    a.col(t).noalias() = modes.transpose() * centered;
  }
  return a;
}

Eigen::MatrixXd reconstruct(const Eigen::MatrixXd& modes, const Eigen::VectorXd& mean, const Eigen::MatrixXd& coeffs) {
  if (modes.cols() != coeffs.rows() || mean.size() != modes.rows()) {
    throw DomainError("reconstruct: dimension mismatch");
  }
  Eigen::MatrixXd d(modes.rows(), coeffs.cols());
#pragma omp parallel for schedule(static) if (coeffs.cols() >= kMinParallelCols)
  for (Index t = 0; t < coeffs.cols(); ++t) {
    d.col(t) = mean;
    d.col(t).noalias() += modes * coeffs.col(t);
  }
  return d;
}

double sum_squared_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, std::span<const Index> rows) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DomainError("sum_squared_diff: shape mismatch");
  const Index cols = a.cols();
  std::vector<double> per_col(static_cast<std::size_t>(cols), 0.0);
#pragma omp parallel for schedule(static) if (cols >= kMinParallelCols)
  for (Index t = 0; t < cols; ++t) {
    double acc = 0.0;
    if (rows.empty()) {
      acc = (a.col(t) - b.col(t)).squaredNorm();
    } else {
      for (Index k : rows) acc += (a(k, t) - b(k, t)) * (a(k, t) - b(k, t));
    }
    per_col[static_cast<std::size_t>(t)] = acc;
  }
  // Ordered combination keeps the result independent of the thread count.
  double total = 0.0;
  for (double v : per_col) total += v;
  return total;
}

Eigen::MatrixXcd conjugate(const Eigen::MatrixXcd& u, const Eigen::MatrixXcd& rho) {
  if (u.rows() != rho.rows() || u.cols() != rho.cols() || u.rows() != u.cols()) {
    throw DomainError("conjugate: dimension mismatch");
  }
  const Index d = u.rows();
  Eigen::MatrixXcd tmp(d, d);
  Eigen::MatrixXcd out(d, d);
  const Eigen::MatrixXcd u_adj = u.adjoint();
#pragma omp parallel if (d >= 128)
  {
#pragma omp for schedule(static)
    for (Index i = 0; i < d; ++i) tmp.row(i).noalias() = u.row(i) * rho;
#pragma omp for schedule(static)
    for (Index i = 0; i < d; ++i) out.row(i).noalias() = tmp.row(i) * u_adj;
  }
  return out;
}

}  // namespace omp
}  // namespace hqrc::kernels
