#include "hqrc/readout.hpp"

#include <cmath>
#include <string>

#include "hqrc/binary_io.hpp"
#include "hqrc/errors.hpp"

namespace hqrc::readout {

using Eigen::Index;

TrainingMatrix::TrainingMatrix(Index n_features, Index n_outputs, Index capacity)
    : x_(std::max<Index>(capacity, 1), n_features + 1), y_(std::max<Index>(capacity, 1), n_outputs) {}

void TrainingMatrix::add_row(const Eigen::VectorXd& features, const Eigen::VectorXd& target) {
  if (features.size() != x_.cols() - 1 || target.size() != y_.cols()) {
    throw DomainError("training row has the wrong width");
  }
  if (rows_ == x_.rows()) {
    const Index grown = 2 * x_.rows();
    x_.conservativeResize(grown, Eigen::NoChange);
    y_.conservativeResize(grown, Eigen::NoChange);
  }
  x_(rows_, 0) = 1.0;
  x_.row(rows_).tail(features.size()) = features.transpose();
  y_.row(rows_) = target.transpose();
  ++rows_;
}

double normal_equation_residual(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double beta,
                                const Eigen::MatrixXd& w) {
  Eigen::MatrixXd a = x.transpose() * x;
  a.diagonal().array() += beta;
  const Eigen::MatrixXd b = x.transpose() * y;
  const double bn = b.norm();
  return (a * w - b).norm() / (bn > 0.0 ? bn : 1.0);
}

ReadoutWeights ridge_fit(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double beta) {
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw DomainError("ridge parameter must be finite and >= 0");
  if (x.rows() != y.rows()) throw DomainError("design matrix and targets have different row counts");
  if (x.rows() == 0 || x.cols() == 0) throw DomainError("empty design matrix");
  if (!x.allFinite() || !y.allFinite()) throw DomainError("design matrix or targets contain non-finite values");

  Eigen::MatrixXd a = x.transpose() * x;
  a.diagonal().array() += beta;
  const Eigen::MatrixXd b = x.transpose() * y;

  ReadoutWeights out;
  out.beta = beta;
  if (beta == 0.0) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    if (qr.rank() < a.cols()) {
      throw NumericError("normal equations are singular with beta = 0; use a ridge parameter beta > 0");
    }
    out.w = qr.solve(b);
  } else {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
      throw NumericError("ridge system factorization failed");
    }
    out.w = ldlt.solve(b);
    // Up to three passes of iterative refinement.
    for (int iter = 0; iter < 3; ++iter) {
      const Eigen::MatrixXd r = b - a * out.w;
      if (r.norm() <= 1e-12 * std::max(b.norm(), 1e-300)) break;
      out.w += ldlt.solve(r);
    }
  }
  if (!out.w.allFinite()) throw NumericError("ridge solve produced non-finite weights");
  return out;
}

Eigen::VectorXd clip_unit(const Eigen::VectorXd& x) {
  Eigen::VectorXd out(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    const double v = x(i);
    if (std::isnan(v)) throw DomainError("cannot clip NaN");
    out(i) = v > 1.0 ? 1.0 : (v < 0.0 ? 0.0 : v);
  }
  return out;
}

namespace {
void require_trained(const ReadoutWeights& weights) {
  if (!weights.trained()) throw StateError("readout weights are not trained");
}
}  // namespace

Eigen::VectorXd apply(const ReadoutWeights& weights, const Eigen::VectorXd& z) {
  require_trained(weights);
  if (z.size() != weights.n_features()) throw DomainError("state width does not match readout");
  return weights.w.row(0).transpose() + weights.w.bottomRows(z.size()).transpose() * z;
}

Eigen::VectorXd predict(const ReadoutWeights& weights, const Eigen::VectorXd& z) {
  return clip_unit(apply(weights, z));
}

Eigen::VectorXd apply_replicated(const ReadoutWeights& weights, const Eigen::VectorXd& z) {
  require_trained(weights);
  if (!weights.replicated) throw StateError("readout weights have not been replicated");
  const auto& rep = *weights.replicated;
  if (z.size() != rep.rows() - 1) throw DomainError("state width does not match readout");
  return rep.row(0).transpose() + rep.bottomRows(z.size()).transpose() * z;
}

ReadoutWeights replicate_weights(const ReadoutWeights& weights, std::span<const int> tiling) {
  require_trained(weights);
  const auto n_in = weights.n_outputs();
  const auto n_qrc = static_cast<Index>(tiling.size());
  if (n_qrc == 0 || n_qrc % n_in != 0) {
    throw DomainError("reservoir count must be a positive multiple of the output dimension");
  }
  ReadoutWeights out = weights;
  Eigen::MatrixXd rep(weights.w.rows(), n_qrc);
  for (Index l = 0; l < n_qrc; ++l) {
    const int c = tiling[static_cast<std::size_t>(l)];
    if (c < 0 || c >= n_in) throw DomainError("tiling entry " + std::to_string(c) + " out of range");
    rep.col(l) = weights.w.col(c);
  }
  out.replicated = std::move(rep);
  return out;
}

namespace {
constexpr std::string_view kMagic = "HQRW";
constexpr std::uint32_t kVersion = 1;

void put_row_major(io::ByteWriter& w, const Eigen::MatrixXd& m) {
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) w.put_f64(m(r, c));
}
Eigen::MatrixXd get_row_major(io::ByteReader& rd, Index rows, Index cols, std::string_view field) {
  Eigen::MatrixXd m(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) m(r, c) = rd.f64(field);
  return m;
}
}  // namespace

std::vector<std::uint8_t> ReadoutWeights::to_bytes() const {
  io::ByteWriter w;
  w.put_bytes(kMagic);
  w.put_u32(kVersion);
  w.put_u64(static_cast<std::uint64_t>(this->w.rows()));
  w.put_u64(static_cast<std::uint64_t>(this->w.cols()));
  w.put_f64(beta);
  w.put_u64(replicated ? static_cast<std::uint64_t>(replicated->cols()) : 0);
  put_row_major(w, this->w);
  if (replicated) put_row_major(w, *replicated);
  return w.take();
}

ReadoutWeights ReadoutWeights::from_bytes(std::span<const std::uint8_t> bytes) {
  io::ByteReader rd(bytes);
  if (rd.bytes(4, "magic") != kMagic) throw ParseError("not a readout weights file", 0);
  if (const auto v = rd.u32("version"); v != kVersion) {
    throw ParseError("unsupported readout version " + std::to_string(v), 4);
  }
  const auto rows = rd.u64("rows");
  const auto cols = rd.u64("cols");
  ReadoutWeights out;
  out.beta = rd.f64("beta");
  const auto rep_cols = rd.u64("replicated_cols");
  const std::uint64_t need = (rows * cols + rows * rep_cols) * 8;
  if (rows > (1u << 24) || cols > (1u << 24) || rep_cols > (1u << 24) || rd.remaining() != need) {
    throw ParseError("readout payload size does not match header dims", rd.offset());
  }
  out.w = get_row_major(rd, static_cast<Index>(rows), static_cast<Index>(cols), "weights");
  if (rep_cols > 0) {
    out.replicated = get_row_major(rd, static_cast<Index>(rows), static_cast<Index>(rep_cols), "replicated");
  }
  return out;
}

void ReadoutWeights::save(const std::filesystem::path& path) const { io::write_file_atomic(path, to_bytes()); }

ReadoutWeights ReadoutWeights::load(const std::filesystem::path& path) { return from_bytes(io::read_file(path)); }

}  // namespace hqrc::readout
