#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "hqrc/data.hpp"
#include "hqrc/errors.hpp"
#include "hqrc/pod.hpp"
#include "oracles.hpp"

using namespace hqrc;
using namespace hqrc::pod;
using Eigen::Index;

namespace {

double orthonormality_error(const Eigen::MatrixXd& v) {
  return (v.transpose() * v - Eigen::MatrixXd::Identity(v.cols(), v.cols())).cwiseAbs().maxCoeff();
}

double residual(const PodBasis& b, const Eigen::MatrixXd& data) {
  const Eigen::MatrixXd s = data.colwise() - b.mean;
  return (s - b.modes * (b.modes.transpose() * s)).squaredNorm();
}

}  // namespace

TEST_CASE("rank-one data is captured by one mode") {
  Pcg32 rng(1);
  const Eigen::VectorXd pattern = oracle::random_real(40, 1, rng);
  const Eigen::VectorXd amp = oracle::random_real(25, 1, rng);
  const Eigen::MatrixXd data = pattern * amp.transpose();
  const auto fit = fit_pod(data, 1);
  CHECK(residual(fit.basis, data) <= 1e-20 * data.squaredNorm() + 1e-24);
  // The anomaly is a multiple of the pattern, so the mode is parallel to it.
  CHECK(std::abs(std::abs(fit.basis.modes.col(0).dot(pattern.normalized())) - 1.0) < 1e-12);
}

TEST_CASE("a complete basis reproduces the data") {
  Pcg32 rng(2);
  const Eigen::MatrixXd data = oracle::random_real(30, 12, rng);
  const auto fit = fit_pod(data, 11);  // 12 snapshots leave an anomaly of rank 11
  CHECK(residual(fit.basis, data) <= 1e-16 * data.squaredNorm());
  CHECK(orthonormality_error(fit.basis.modes) <= 1e-8);
}

TEST_CASE("residual equals the discarded eigenvalues of the spatial covariance") {
  Pcg32 rng(3);
  const Eigen::MatrixXd data = oracle::random_real(20, 30, rng);
  const Eigen::MatrixXd s = data.colwise() - data.rowwise().mean();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> full(s * s.transpose());
  const Eigen::VectorXd lambda = full.eigenvalues().reverse();
  for (int m = 1; m <= 19; ++m) {
    const auto fit = fit_pod(data, m);
    const double discarded = lambda.tail(20 - m).sum();
    CHECK(std::abs(residual(fit.basis, data) - discarded) <= 1e-6 * std::max(discarded, 1e-12 * lambda(0)));
    CHECK((fit.basis.eigenvalues - lambda.head(m)).cwiseAbs().maxCoeff() <= 1e-9 * lambda(0));
  }
  const auto fit5 = fit_pod(data, 5);
  CHECK(std::abs(residual(fit5.basis, data) - lambda.tail(15).sum()) <= 1e-8 * lambda.tail(15).sum());
}

TEST_CASE("modes are orthonormal, sorted and sign-normalized") {
  Pcg32 rng(4);
  const Eigen::MatrixXd data = oracle::random_real(300, 60, rng);
  const auto fit = fit_pod(data, 10);
  CHECK(orthonormality_error(fit.basis.modes) <= 1e-8);
  for (int m = 0; m < 10; ++m) {
    Index arg = 0;
    fit.basis.modes.col(m).cwiseAbs().maxCoeff(&arg);
    CHECK(fit.basis.modes(arg, m) > 0.0);
    if (m > 0) CHECK(fit.basis.eigenvalues(m) <= fit.basis.eigenvalues(m - 1));
    CHECK(fit.basis.eigenvalues(m) >= 0.0);
  }
}

TEST_CASE("increasing the mode count never increases the residual") {
  Pcg32 rng(5);
  const Eigen::MatrixXd data = oracle::random_real(30, 25, rng);
  double prev = std::numeric_limits<double>::infinity();
  for (int m = 1; m <= 24; ++m) {
    const double r = residual(fit_pod(data, m).basis, data);
    CHECK(r <= prev * (1 + 1e-12));
    prev = r;
  }
}

TEST_CASE("rank-3 synthetic field is recovered exactly with three modes") {
  data::SynthSpec spec;
  spec.rank = 3;
  spec.n_lat = 10;
  spec.n_lon = 12;
  spec.n_time = 200;
  const Eigen::MatrixXd field = data::synth_field(spec);
  const auto fit = fit_pod(field, 3);
  const Eigen::MatrixXd s = field.colwise() - fit.basis.mean;
  CHECK(residual(fit.basis, field) / s.squaredNorm() <= 1e-8);
}

TEST_CASE("zero-amplitude field has an all-zero spectrum") {
  data::SynthSpec spec;
  spec.amplitude = 0.0;
  spec.n_lat = 6;
  spec.n_lon = 5;
  spec.n_time = 40;
  const auto fit = fit_pod(data::synth_field(spec), 3);
  CHECK(fit.spectrum.cwiseAbs().maxCoeff() <= 1e-20);
  CHECK(orthonormality_error(fit.basis.modes) <= 1e-12);
}

TEST_CASE("mode count outside 1..min(N, T) is rejected") {
  const Eigen::MatrixXd data = Eigen::MatrixXd::Ones(4, 6);
  CHECK_THROWS_AS(fit_pod(data, 0), DomainError);
  CHECK_THROWS_AS(fit_pod(data, 5), DomainError);
}

TEST_CASE("projection and reconstruction") {
  Pcg32 rng(6);
  const Eigen::MatrixXd data = oracle::random_real(50, 40, rng);
  const auto b = fit_pod(data, 4).basis;
  CHECK(project(b, b.mean).cwiseAbs().maxCoeff() < 1e-14);
  const Eigen::VectorXd a = project(b, b.mean + 3.0 * b.modes.col(0));
  CHECK(a(0) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(a.tail(3).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((reconstruct(b, Eigen::VectorXd::Zero(4)) - b.mean).norm() == 0.0);

  const Eigen::VectorXd d = data.col(7);
  const Eigen::VectorXd once = project(b, d);
  CHECK((project(b, reconstruct(b, once)) - once).cwiseAbs().maxCoeff() < 1e-12);

  const Eigen::VectorXd in_span = b.mean + b.modes * Eigen::Vector4d(1, -2, 0.5, 0.25);
  CHECK((reconstruct(b, project(b, in_span)) - in_span).cwiseAbs().maxCoeff() < 1e-9);

  const Eigen::Vector4d c(0.3, -0.1, 2.0, 1.0);
  Eigen::VectorXd loop = b.mean;
  for (Index i = 0; i < 50; ++i)
    for (Index m = 0; m < 4; ++m) loop(i) += c(m) * b.modes(i, m);
  CHECK((reconstruct(b, c) - loop).cwiseAbs().maxCoeff() < 1e-13);

  const Eigen::MatrixXd all = project_all(b, data, kernels::Exec::kSerial);
  CHECK(all.rows() == 40);
  CHECK((all.row(7).transpose() - once).cwiseAbs().maxCoeff() < 1e-12);
  const Eigen::MatrixXd back = reconstruct_all(b, all, kernels::Exec::kParallel);
  CHECK((back.col(7) - reconstruct(b, once)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(project(b, Eigen::VectorXd::Zero(3)), DomainError);
}

TEST_CASE("min-max scaling") {
  Eigen::MatrixXd train(3, 2);
  train << 1, 5, 3, 5, 2, 5;
  const auto sc = MinMaxScaler::fit(train);
  const Eigen::MatrixXd s = sc.scale(train);
  CHECK(s(0, 0) == 0.0);
  CHECK(s(1, 0) == 1.0);
  CHECK(s(2, 0) == 0.5);
  CHECK((s.col(1).array() == 0.5).all());
  CHECK((sc.unscale(s) - train).cwiseAbs().maxCoeff() <= 1e-12);

  const auto out = sc.scale(Eigen::VectorXd(Eigen::Vector2d(5.0, 5.0)));
  CHECK(out(0) == 2.0);  // beyond the training range, left unclipped

  MinMaxScaler empty;
  CHECK_THROWS_AS(empty.scale(Eigen::VectorXd(Eigen::Vector2d(1, 2))), StateError);
}

TEST_CASE("pod model serializes exactly") {
  Pcg32 rng(7);
  const Eigen::MatrixXd data = oracle::random_real(30, 20, rng);
  const auto fit = fit_pod(data, 3);
  PodModel m{fit.basis, fit.series.scaler};
  const auto bytes = m.to_bytes();
  const auto back = PodModel::from_bytes(bytes);
  CHECK(back.basis.modes == m.basis.modes);
  CHECK(back.basis.mean == m.basis.mean);
  CHECK(back.basis.eigenvalues == m.basis.eigenvalues);
  CHECK(back.scaler.min() == m.scaler.min());
  CHECK(back.to_bytes() == bytes);
  auto bad = bytes;
  bad.resize(bad.size() - 3);
  CHECK_THROWS_AS(PodModel::from_bytes(bad), ParseError);
}
