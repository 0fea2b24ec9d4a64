#include <cmath>

#include "doctest.h"
#include "hqrc/errors.hpp"
#include "hqrc/metrics.hpp"
#include "oracles.hpp"

using namespace hqrc;
using namespace hqrc::metrics;
using Eigen::Index;

TEST_CASE("rmse basics") {
  Pcg32 rng(1);
  const Eigen::MatrixXd truth = oracle::random_real(10, 7, rng);
  CHECK(rmse(truth, truth) == 0.0);
  CHECK(rmse((truth.array() + 0.3).matrix(), truth) == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(rmse((truth.array() - 2.0).matrix(), truth) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK_THROWS_AS(rmse(truth, truth.topRows(3)), DomainError);
  CHECK_THROWS_AS(rmse(Eigen::MatrixXd(), Eigen::MatrixXd()), DomainError);
}

TEST_CASE("rmse matches a triple loop, with and without a region") {
  Pcg32 rng(2);
  const Eigen::MatrixXd a = oracle::random_real(12, 9, rng), b = oracle::random_real(12, 9, rng);
  const std::vector<Index> rows{0, 4, 11};
  double all = 0, sub = 0;
  for (Index t = 0; t < 9; ++t)
    for (Index i = 0; i < 12; ++i) {
      const double d = (a(i, t) - b(i, t)) * (a(i, t) - b(i, t));
      all += d;
      for (Index r : rows) sub += r == i ? d : 0.0;
    }
  CHECK(rmse(a, b) == doctest::Approx(std::sqrt(all / 108)).epsilon(1e-13));
  CHECK(rmse(a, b, rows) == doctest::Approx(std::sqrt(sub / 27)).epsilon(1e-13));
  CHECK(rmse(a, b, rows, kernels::Exec::kSerial) == doctest::Approx(std::sqrt(sub / 27)).epsilon(1e-13));
}

TEST_CASE("rmse over a partition combines by sum of squares") {
  Pcg32 rng(3);
  const Eigen::MatrixXd a = oracle::random_real(20, 6, rng), b = oracle::random_real(20, 6, rng);
  std::vector<Index> first, second;
  for (Index i = 0; i < 20; ++i) (i % 3 == 0 ? first : second).push_back(i);
  const double r1 = rmse(a, b, first), r2 = rmse(a, b, second);
  const double combined =
      std::sqrt((r1 * r1 * static_cast<double>(first.size()) + r2 * r2 * static_cast<double>(second.size())) / 20.0);
  CHECK(rmse(a, b) == doctest::Approx(combined).epsilon(1e-13));
}

TEST_CASE("rmnse basics") {
  Pcg32 rng(4);
  const Eigen::MatrixXd truth = oracle::random_real(50, 3, rng);
  CHECK(rmnse(truth, truth) == 0.0);
  const Eigen::MatrixXd mean = truth.colwise().mean().replicate(50, 1);
  CHECK(rmnse(mean, truth) == doctest::Approx(1.0).epsilon(1e-13));
  Eigen::MatrixXd flat = truth;
  flat.col(1).setConstant(2.0);
  CHECK_THROWS_AS(rmnse(truth, flat), DomainError);
}

TEST_CASE("rmnse by hand on two dimensions") {
  Eigen::MatrixXd truth(2, 2), pred(2, 2);
  truth << 0, 0, 2, 4;  // variances 1 and 4
  pred << 1, 0, 2, 2;   // squared errors: dim0 {1, 0}, dim1 {0, 4}
  // mean of {1/1, 0/1, 0/4, 4/4} = 0.5
  CHECK(rmnse(pred, truth) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-15));
}

TEST_CASE("rmnse is invariant under shared per-dimension affine maps") {
  Pcg32 rng(5);
  const Eigen::MatrixXd truth = oracle::random_real(40, 3, rng), pred = oracle::random_real(40, 3, rng);
  const Eigen::Array3d scale(2.0, -0.5, 10.0), shift(1.0, 3.0, -4.0);
  Eigen::MatrixXd t2 = truth, p2 = pred;
  for (Index m = 0; m < 3; ++m) {
    t2.col(m) = (truth.col(m).array() * scale(m) + shift(m)).matrix();
    p2.col(m) = (pred.col(m).array() * scale(m) + shift(m)).matrix();
  }
  CHECK(rmnse(p2, t2) == doctest::Approx(rmnse(pred, truth)).epsilon(1e-12));
}

TEST_CASE("reconstruction floor") {
  Pcg32 rng(6);
  const Eigen::MatrixXd data = oracle::random_real(15, 30, rng);
  const auto fit = pod::fit_pod(data, 3);
  const Eigen::MatrixXd in_span = pod::reconstruct_all(fit.basis, oracle::random_real(10, 3, rng));
  CHECK(reconstruction_floor(fit.basis, in_span) < 1e-13);
  const auto full = pod::fit_pod(data, 15);
  CHECK(reconstruction_floor(full.basis, data) <= 1e-8);
  CHECK(reconstruction_floor(fit.basis, data) > 0.1);
}

TEST_CASE("ensemble statistics") {
  Pcg32 rng(7);
  const Eigen::MatrixXd m = oracle::random_real(6, 2, rng);
  const auto single = ensemble_average({m});
  CHECK(single.mean == m);
  CHECK(single.std.cwiseAbs().maxCoeff() == 0.0);

  const auto pair = ensemble_average({(m.array() + 0.25).matrix(), (m.array() - 0.25).matrix()});
  CHECK((pair.mean - m).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((pair.std.array() - 0.25).abs().maxCoeff() < 1e-15);

  std::vector<Eigen::MatrixXd> five;
  for (int i = 0; i < 5; ++i) five.push_back(oracle::random_real(4, 3, rng));
  const auto stats = ensemble_average(five);
  for (Index r = 0; r < 4; ++r)
    for (Index c = 0; c < 3; ++c) {
      double s = 0, ss = 0;
      for (const auto& f : five) s += f(r, c);
      const double mu = s / 5;
      for (const auto& f : five) ss += (f(r, c) - mu) * (f(r, c) - mu);
      CHECK(stats.mean(r, c) == doctest::Approx(mu).epsilon(1e-14));
      CHECK(stats.std(r, c) == doctest::Approx(std::sqrt(ss / 5)).epsilon(1e-12));
    }
  CHECK(stats.std.minCoeff() > 0.0);
  CHECK_THROWS_AS(ensemble_average({}), DomainError);
  CHECK_THROWS_AS(ensemble_average({m, m.topRows(2)}), DomainError);
}

TEST_CASE("metric reports render as JSON and CSV") {
  MetricReport r{0.5, 0.75, 0.125, 0.25, 300};
  CHECK(r.csv_row() == "0.5,0.75,0.125,0.25,300");
  CHECK(MetricReport::csv_columns().size() == 5);
  CHECK(r.to_json().find("\"rmnse_modal\": 0.125") != std::string::npos);
}
