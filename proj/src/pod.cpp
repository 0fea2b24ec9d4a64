#include "hqrc/pod.hpp"

#include <cmath>
#include <string>

#include "hqrc/binary_io.hpp"
#include "hqrc/errors.hpp"

namespace hqrc::pod {

using Eigen::Index;

MinMaxScaler::MinMaxScaler(Eigen::VectorXd min, Eigen::VectorXd max) : min_(std::move(min)), max_(std::move(max)) {
  if (min_.size() != max_.size()) throw DomainError("scaler extrema have different lengths");
  if (!((max_ - min_).array() >= 0.0).all()) throw DomainError("scaler max must be >= min");
}

MinMaxScaler MinMaxScaler::fit(const Eigen::MatrixXd& coeffs) {
  if (coeffs.rows() == 0) throw DomainError("cannot fit a scaler on zero samples");
  return {coeffs.colwise().minCoeff().transpose(), coeffs.colwise().maxCoeff().transpose()};
}

void MinMaxScaler::require_fitted(Index m) const {
  if (!fitted()) throw StateError("scaler has not been fitted");
  if (m != min_.size()) throw DomainError("coefficient width does not match scaler");
}

Eigen::VectorXd MinMaxScaler::scale(const Eigen::VectorXd& coeffs) const {
  require_fitted(coeffs.size());
  Eigen::VectorXd out(coeffs.size());
  for (Index m = 0; m < coeffs.size(); ++m) {
    const double range = max_(m) - min_(m);
    out(m) = range > 0.0 ? (coeffs(m) - min_(m)) / range : 0.5;
  }
  return out;
}

Eigen::VectorXd MinMaxScaler::unscale(const Eigen::VectorXd& scaled) const {
  require_fitted(scaled.size());
  Eigen::VectorXd out(scaled.size());
  for (Index m = 0; m < scaled.size(); ++m) {
    const double range = max_(m) - min_(m);
    out(m) = range > 0.0 ? min_(m) + scaled(m) * range : min_(m);
  }
  return out;
}

Eigen::MatrixXd MinMaxScaler::scale(const Eigen::MatrixXd& coeffs) const {
  Eigen::MatrixXd out(coeffs.rows(), coeffs.cols());
  for (Index t = 0; t < coeffs.rows(); ++t) out.row(t) = scale(Eigen::VectorXd(coeffs.row(t).transpose())).transpose();
  return out;
}

Eigen::MatrixXd MinMaxScaler::unscale(const Eigen::MatrixXd& scaled) const {
  Eigen::MatrixXd out(scaled.rows(), scaled.cols());
  for (Index t = 0; t < scaled.rows(); ++t) {
    out.row(t) = unscale(Eigen::VectorXd(scaled.row(t).transpose())).transpose();
  }
  return out;
}

PodFit fit_pod(const Eigen::MatrixXd& data, int n_modes, kernels::Exec exec) {
  const Index n = data.rows();
  const Index t = data.cols();
  if (n == 0 || t == 0) throw DomainError("POD needs a non-empty snapshot matrix");
  if (n_modes < 1 || n_modes > std::min(n, t)) {
    throw DomainError("mode count " + std::to_string(n_modes) + " must lie in 1..min(N, T) = " +
                      std::to_string(std::min(n, t)));
  }
  if (!data.allFinite()) throw DomainError("snapshot matrix contains non-finite values");

  PodFit fit;
  fit.basis.mean = data.rowwise().mean();
  const Eigen::MatrixXd s = data.colwise() - fit.basis.mean;

  const Eigen::MatrixXd g = kernels::gram(s, exec);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(g);
  if (solver.info() != Eigen::Success) throw NumericError("snapshot eigendecomposition failed");

  // Eigen returns ascending order.
  const Eigen::VectorXd ascending = solver.eigenvalues();
  fit.spectrum = ascending.reverse().cwiseMax(0.0);

  const double lambda_max = fit.spectrum(0);
  const double cutoff = std::max(lambda_max, 1.0) * 1e-13 * static_cast<double>(t);

  fit.basis.modes.resize(n, n_modes);
  fit.basis.eigenvalues.resize(n_modes);
  for (int m = 0; m < n_modes; ++m) {
    const double lambda = fit.spectrum(m);
    fit.basis.eigenvalues(m) = lambda;
    Eigen::VectorXd mode;
    if (lambda > cutoff) {
      mode = s * solver.eigenvectors().col(t - 1 - m) / std::sqrt(lambda);
    } else {
      // Null direction: complete the basis with a unit vector orthogonal to
      // the modes found so far.
      mode = Eigen::VectorXd::Zero(n);
      for (Index k = 0; k < n; ++k) {
        Eigen::VectorXd e = Eigen::VectorXd::Unit(n, k);
        for (int p = 0; p < m; ++p) e -= fit.basis.modes.col(p).dot(e) * fit.basis.modes.col(p);
        if (e.norm() > 0.5) {
          mode = e;
          break;
        }
      }
    }
    // One Gram-Schmidt sweep against the earlier modes.
    for (int p = 0; p < m; ++p) mode -= fit.basis.modes.col(p).dot(mode) * fit.basis.modes.col(p);
    mode.normalize();
    Index arg = 0;
    mode.cwiseAbs().maxCoeff(&arg);
    if (mode(arg) < 0.0) mode = -mode;
    fit.basis.modes.col(m) = mode;
  }

  fit.series.coeffs = kernels::project(fit.basis.modes, fit.basis.mean, data, exec).transpose();
  fit.series.scaler = MinMaxScaler::fit(fit.series.coeffs);
  return fit;
}

Eigen::VectorXd project(const PodBasis& basis, const Eigen::VectorXd& snapshot) {
  if (snapshot.size() != basis.n_points()) throw DomainError("snapshot length does not match basis");
  return basis.modes.transpose() * (snapshot - basis.mean);
}

Eigen::MatrixXd project_all(const PodBasis& basis, const Eigen::MatrixXd& data, kernels::Exec exec) {
  if (data.rows() != basis.n_points()) throw DomainError("snapshot length does not match basis");
  return kernels::project(basis.modes, basis.mean, data, exec).transpose();
}

Eigen::VectorXd reconstruct(const PodBasis& basis, const Eigen::VectorXd& coeffs) {
  if (coeffs.size() != basis.n_modes()) throw DomainError("coefficient count does not match basis");
  return basis.mean + basis.modes * coeffs;
}

Eigen::MatrixXd reconstruct_all(const PodBasis& basis, const Eigen::MatrixXd& coeffs, kernels::Exec exec) {
  if (coeffs.cols() != basis.n_modes()) throw DomainError("coefficient count does not match basis");
  return kernels::reconstruct(basis.modes, basis.mean, coeffs.transpose(), exec);
}

PodBasis truncate(const PodBasis& basis, int n_modes) {
  if (n_modes < 1 || n_modes > basis.n_modes()) throw DomainError("cannot truncate to that many modes");
  return {basis.mean, basis.modes.leftCols(n_modes), basis.eigenvalues.head(n_modes)};
}

namespace {
constexpr std::string_view kMagic = "HQPD";
}

std::vector<std::uint8_t> PodModel::to_bytes() const {
  io::ByteWriter w;
  w.put_bytes(kMagic);
  w.put_u32(1);
  const Index n = basis.n_points();
  const Index m = basis.n_modes();
  w.put_u64(static_cast<std::uint64_t>(n));
  w.put_u64(static_cast<std::uint64_t>(m));
  w.put_u64(scaler.fitted() ? 1 : 0);
  w.put_f64s({basis.mean.data(), static_cast<std::size_t>(n)});
  for (Index r = 0; r < n; ++r)
    for (Index c = 0; c < m; ++c) w.put_f64(basis.modes(r, c));
  w.put_f64s({basis.eigenvalues.data(), static_cast<std::size_t>(m)});
  if (scaler.fitted()) {
    w.put_f64s({scaler.min().data(), static_cast<std::size_t>(m)});
    w.put_f64s({scaler.max().data(), static_cast<std::size_t>(m)});
  }
  return w.take();
}

PodModel PodModel::from_bytes(std::span<const std::uint8_t> bytes) {
  io::ByteReader rd(bytes);
  if (rd.bytes(4, "magic") != kMagic) throw ParseError("not a POD basis file", 0);
  if (rd.u32("version") != 1) throw ParseError("unsupported POD basis version", 4);
  const auto n = rd.u64("n_points");
  const auto m = rd.u64("n_modes");
  const auto has_scaler = rd.u64("has_scaler");
  if (n > (1ull << 32) || m > n || has_scaler > 1 ||
      rd.remaining() != 8 * (n + n * m + m + (has_scaler ? 2 * m : 0))) {
    throw ParseError("POD payload size does not match header", rd.offset());
  }
  PodModel model;
  model.basis.mean.resize(static_cast<Index>(n));
  rd.f64s({model.basis.mean.data(), n}, "mean");
  model.basis.modes.resize(static_cast<Index>(n), static_cast<Index>(m));
  for (Index r = 0; r < model.basis.modes.rows(); ++r)
    for (Index c = 0; c < model.basis.modes.cols(); ++c) model.basis.modes(r, c) = rd.f64("modes");
  model.basis.eigenvalues.resize(static_cast<Index>(m));
  rd.f64s({model.basis.eigenvalues.data(), m}, "eigenvalues");
  if (has_scaler) {
    Eigen::VectorXd lo(static_cast<Index>(m)), hi(static_cast<Index>(m));
    rd.f64s({lo.data(), m}, "scaler_min");
    rd.f64s({hi.data(), m}, "scaler_max");
    model.scaler = MinMaxScaler(std::move(lo), std::move(hi));
  }
  return model;
}

void PodModel::save(const std::filesystem::path& path) const { io::write_file_atomic(path, to_bytes()); }

PodModel PodModel::load(const std::filesystem::path& path) { return from_bytes(io::read_file(path)); }

}  // namespace hqrc::pod
