#include <cmath>

#include "doctest.h"
#include "hqrc/errors.hpp"
#include "hqrc/forecaster.hpp"
#include "oracles.hpp"

using namespace hqrc;
using namespace hqrc::forecast;
using Eigen::Index;

namespace {

reservoir::HqrConfig small() {
  reservoir::HqrConfig c;
  c.n_qubits = 3;
  c.n_reservoirs = 2;
  c.virtual_nodes = 3;
  c.n_in = 2;
  c.seed = 5;
  return c;
}

Eigen::MatrixXd series(Index t) {
  Eigen::MatrixXd u(t, 2);
  for (Index k = 0; k < t; ++k) {
    u(k, 0) = 0.5 + 0.4 * std::sin(0.3 * static_cast<double>(k));
    u(k, 1) = 0.5 + 0.3 * std::cos(0.17 * static_cast<double>(k));
  }
  return u;
}

}  // namespace

TEST_CASE("training pairs each state with the next input") {
  const auto u = series(80);
  HqrcForecaster model(small());
  const auto w = train(model, u, 10, 1e-6);
  CHECK(w.n_features() == model.n_features());
  CHECK(w.n_outputs() == 2);

  // Rebuild the design matrix by hand and compare with a direct fit.
  HqrcForecaster manual(small());
  readout::TrainingMatrix tm(manual.n_features(), 2);
  for (Index k = 0; k < 10; ++k) manual.observe(u.row(k).transpose());
  for (Index k = 10; k + 1 < 80; ++k) {
    manual.observe(u.row(k).transpose());
    tm.add_row(manual.features(), u.row(k + 1).transpose());
  }
  CHECK(tm.rows() == 69);
  CHECK((readout::ridge_fit(tm, 1e-6).w - w.w).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("training needs enough data and a readout is required to predict") {
  HqrcForecaster model(small());
  CHECK_THROWS_AS(train(model, series(11), 10, 1e-6), DomainError);
  CHECK_THROWS_AS(model.predict(), StateError);
  CHECK_THROWS_AS(model.advance_closed(), StateError);
}

TEST_CASE("horizon 1 is a single prediction after warm-up") {
  const auto u = series(120);
  HqrcForecaster model(small());
  train(model, u.topRows(80), 20, 1e-6);
  const auto out = rollout(model, u, 100, 20, 1);
  HqrcForecaster check(small());
  check.set_readout(model.weights());
  for (Index k = 80; k < 100; ++k) check.observe(u.row(k).transpose());
  CHECK(out.rows() == 1);
  CHECK((out.row(0).transpose() - check.predict()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("rollouts stay in the unit cube and are reproducible") {
  const auto u = series(200);
  for (int kind = 0; kind < 2; ++kind) {
    std::unique_ptr<Forecaster> a, b;
    if (kind == 0) {
      a = std::make_unique<HqrcForecaster>(small());
      b = std::make_unique<HqrcForecaster>(small(), kernels::Exec::kSerial);
    } else {
      esn::EsnConfig cfg;
      cfg.seed = 4;
      a = std::make_unique<EsnForecaster>(cfg, 2);
      b = std::make_unique<EsnForecaster>(cfg, 2);
    }
    train(*a, u.topRows(120), 20, 1e-6);
    train(*b, u.topRows(120), 20, 1e-6);
    const auto ra = rollout(*a, u, 150, 20, 60), rb = rollout(*b, u, 150, 20, 60);
    CHECK(ra.minCoeff() >= 0.0);
    CHECK(ra.maxCoeff() <= 1.0);
    CHECK((ra.array() == rb.array()).all());
  }
}

TEST_CASE("a rollout resumed from a saved state matches the uninterrupted one") {
  const auto u = series(200);
  for (int kind = 0; kind < 2; ++kind) {
    std::unique_ptr<Forecaster> m;
    if (kind == 0) {
      m = std::make_unique<HqrcForecaster>(small());
    } else {
      m = std::make_unique<EsnForecaster>(esn::EsnConfig{}, 2);
    }
    train(*m, u.topRows(120), 20, 1e-6);
    const auto full = rollout(*m, u, 150, 20, 40);

    m->reset();
    for (Index k = 130; k < 150; ++k) m->observe(u.row(k).transpose());
    Eigen::MatrixXd resumed(40, 2);
    std::vector<std::uint8_t> saved;
    for (int h = 0; h < 15; ++h) {
      resumed.row(h) = m->predict().transpose();
      m->advance_closed();
    }
    saved = m->save_state();
    m->reset();
    m->load_state(saved);
    for (int h = 15; h < 40; ++h) {
      resumed.row(h) = m->predict().transpose();
      m->advance_closed();
    }
    CHECK((full.array() == resumed.array()).all());
  }
}

TEST_CASE("rollout argument checks") {
  const auto u = series(100);
  HqrcForecaster model(small());
  train(model, u, 10, 1e-6);
  CHECK_THROWS_AS(rollout(model, u, 5, 10, 3), DomainError);
  CHECK_THROWS_AS(rollout(model, u, 50, 10, 0), DomainError);
  CHECK_THROWS_AS(rollout(model, u, 50, 0, 3, Eigen::VectorXd::Zero(2)), DomainError);
  CHECK_NOTHROW(rollout(model, u, 50, 0, 3));
}

TEST_CASE("persistence repeats the last observed row") {
  const auto u = series(30);
  const auto p = persistence(u, 10, 4);
  CHECK(p.rows() == 4);
  for (Index h = 0; h < 4; ++h) CHECK(p.row(h) == u.row(9));
  CHECK_THROWS_AS(persistence(u, 0, 4), DomainError);
}
