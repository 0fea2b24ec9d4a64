#pragma once

#include <Eigen/Dense>
#include <span>

namespace hqrc::kernels {

/// Selects between the plain-loop reference kernels and the OpenMP ones.
/// Both produce the same result up to floating-point summation order.
enum class Exec { kSerial, kParallel };

/// Reference kernels: straightforward loops, kept for cross-checking.
namespace serial {

/// G = Sᵀ S for a column-snapshot matrix S (N×T).
Eigen::MatrixXd gram(const Eigen::MatrixXd& s);
/// A = Vᵀ (D − mean·1ᵀ), returned M×T.
Eigen::MatrixXd project(const Eigen::MatrixXd& modes, const Eigen::VectorXd& mean, const Eigen::MatrixXd& data);
/// D = mean·1ᵀ + V·A, returned N×T.
Eigen::MatrixXd reconstruct(const Eigen::MatrixXd& modes, const Eigen::VectorXd& mean, const Eigen::MatrixXd& coeffs);
/// Σ (a − b)² over the given rows (all rows when empty) and all columns.
double sum_squared_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, std::span<const Eigen::Index> rows);
/// U ρ U†.
Eigen::MatrixXcd conjugate(const Eigen::MatrixXcd& u, const Eigen::MatrixXcd& rho);

}  // namespace serial

/// OpenMP kernels. Loops are partitioned over output columns/rows so every
/// output element is written by exactly one thread; results do not depend on
/// the thread count.
namespace omp {

Eigen::MatrixXd gram(const Eigen::MatrixXd& s);
Eigen::MatrixXd project(const Eigen::MatrixXd& modes, const Eigen::VectorXd& mean, const Eigen::MatrixXd& data);
Eigen::MatrixXd reconstruct(const Eigen::MatrixXd& modes, const Eigen::VectorXd& mean, const Eigen::MatrixXd& coeffs);
double sum_squared_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, std::span<const Eigen::Index> rows);
Eigen::MatrixXcd conjugate(const Eigen::MatrixXcd& u, const Eigen::MatrixXcd& rho);

}  // namespace omp

inline Eigen::MatrixXd gram(const Eigen::MatrixXd& s, Exec exec = Exec::kParallel) {
  return exec == Exec::kSerial ? serial::gram(s) : omp::gram(s);
}
inline Eigen::MatrixXd project(const Eigen::MatrixXd& modes, const Eigen::VectorXd& mean,
                               const Eigen::MatrixXd& data, Exec exec = Exec::kParallel) {
  return exec == Exec::kSerial ? serial::project(modes, mean, data) : omp::project(modes, mean, data);
}
inline Eigen::MatrixXd reconstruct(const Eigen::MatrixXd& modes, const Eigen::VectorXd& mean,
                                   const Eigen::MatrixXd& coeffs, Exec exec = Exec::kParallel) {
  return exec == Exec::kSerial ? serial::reconstruct(modes, mean, coeffs) : omp::reconstruct(modes, mean, coeffs);
}
inline double sum_squared_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                               std::span<const Eigen::Index> rows, Exec exec = Exec::kParallel) {
  return exec == Exec::kSerial ? serial::sum_squared_diff(a, b, rows) : omp::sum_squared_diff(a, b, rows);
}
inline Eigen::MatrixXcd conjugate(const Eigen::MatrixXcd& u, const Eigen::MatrixXcd& rho,
                                  Exec exec = Exec::kParallel) {
  return exec == Exec::kSerial ? serial::conjugate(u, rho) : omp::conjugate(u, rho);
}

/// Number of OpenMP threads available (1 when built without OpenMP).
int max_threads();

}  // namespace hqrc::kernels
