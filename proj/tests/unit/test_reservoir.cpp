#include <cmath>

#include "doctest.h"
#include "hqrc/errors.hpp"
#include "hqrc/reservoir.hpp"
#include "oracles.hpp"

using namespace hqrc;
using namespace hqrc::reservoir;
using quantum::DensityMatrix;
using quantum::IsingParams;
using Eigen::Index;

namespace {

IsingParams zero_hamiltonian(int n) {
  IsingParams p;
  p.n_qubits = n;
  p.coupling_j = 1.0;
  p.couplings_h = Eigen::MatrixXd::Zero(n, n);
  p.fields_g = Eigen::VectorXd::Zero(n);
  return p;
}

/// inject, then V × (evolve by τ/V, measure), composed from the primitives.
Eigen::VectorXd literal_step(DensityMatrix& rho, const ReservoirDynamics& dyn, double u) {
  rho = quantum::inject_input(rho, u);
  Eigen::VectorXd out(dyn.n_signals());
  for (int v = 0; v < dyn.v_nodes; ++v) {
    rho = quantum::evolve(rho, dyn.propagator, kernels::Exec::kSerial);
    const auto s = quantum::measure(rho, dyn.observables);
    for (int j = 0; j < dyn.n_qubits(); ++j) out(j * dyn.v_nodes + v) = s(j);
  }
  return out;
}

HqrConfig small_config(int n_res, int n_in, double alpha) {
  HqrConfig c;
  c.n_qubits = 3;
  c.n_reservoirs = n_res;
  c.virtual_nodes = 4;
  c.tau = 2.0;
  c.alpha = alpha;
  c.n_in = n_in;
  c.seed = 21;
  return c;
}

}  // namespace

TEST_CASE("propagator substep times V equals tau") {
  const auto dyn = ReservoirDynamics::create(IsingParams::random(3, 2.0, 1), 4.0, 10);
  CHECK(std::abs(dyn->propagator.dt * dyn->v_nodes - dyn->tau) <= 1e-12);
  CHECK(dyn->propagator.unitarity_error() <= 1e-10);
}

TEST_CASE("V = 1 reduces to a single inject-evolve-measure step") {
  const auto dyn = ReservoirDynamics::create(IsingParams::random(2, 2.0, 2), 4.0, 1);
  QuantumReservoir res(dyn);
  DensityMatrix rho = DensityMatrix::maximally_mixed(2);
  const auto s = res.substep_evolve(0.3);
  const auto u_tau = quantum::propagator(quantum::build_hamiltonian(dyn->params), 4.0);
  const auto expected = quantum::measure(quantum::evolve(quantum::inject_input(rho, 0.3), u_tau), dyn->observables);
  CHECK((s - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("zero Hamiltonian gives identical substep signals equal to the post-injection values") {
  const auto dyn = ReservoirDynamics::create(zero_hamiltonian(2), 4.0, 2);
  QuantumReservoir res(dyn);
  const auto s = res.substep_evolve(0.2);
  const auto post = quantum::measure(quantum::inject_input(DensityMatrix::maximally_mixed(2), 0.2), dyn->observables);
  for (int j = 0; j < 2; ++j) {
    CHECK(s(j * 2) == doctest::Approx(post(j)).epsilon(1e-14));
    CHECK(s(j * 2 + 1) == doctest::Approx(post(j)).epsilon(1e-14));
  }
}

TEST_CASE("substep evolution matches the composed primitives over many steps") {
  const auto dyn = ReservoirDynamics::create(IsingParams::random(2, 2.0, 3), 4.0, 3);
  QuantumReservoir res(dyn);
  DensityMatrix rho = DensityMatrix::maximally_mixed(2);
  Pcg32 rng(4);
  for (int k = 0; k < 50; ++k) {
    const double u = rng.uniform01();
    const auto fast = res.substep_evolve(u);
    const auto slow = literal_step(rho, *dyn, u);
    REQUIRE((fast - slow).cwiseAbs().maxCoeff() < 1e-11);
  }
  CHECK((res.state().entries() - rho.entries()).cwiseAbs().maxCoeff() < 1e-11);
}

TEST_CASE("state round-trips through set_state") {
  const auto dyn = ReservoirDynamics::create(IsingParams::random(3, 2.0, 5), 4.0, 2);
  QuantumReservoir res(dyn);
  Pcg32 rng(6);
  const DensityMatrix rho(oracle::random_density(3, rng));
  res.set_state(rho);
  CHECK((res.state().entries() - rho.entries()).cwiseAbs().maxCoeff() < 1e-13);
  CHECK_THROWS_AS(res.substep_evolve(1.5), DomainError);
}

TEST_CASE("block tiling assigns contiguous blocks") {
  CHECK(block_tiling(5, 1) == std::vector<int>{0, 0, 0, 0, 0});
  CHECK(block_tiling(4, 2) == std::vector<int>{0, 0, 1, 1});
  CHECK(block_tiling(3, 3) == std::vector<int>{0, 1, 2});
  CHECK_THROWS_AS(block_tiling(5, 2), DomainError);
}

TEST_CASE("feedback matrix is row-stochastic and seeded") {
  const auto w = random_feedback(4, 30, 7);
  CHECK(w.minCoeff() >= 0.0);
  for (Index r = 0; r < 4; ++r) CHECK(std::abs(w.row(r).sum() - 1.0) < 1e-12);
  CHECK(w == random_feedback(4, 30, 7));
  CHECK(w != random_feedback(4, 30, 8));
}

TEST_CASE("alpha = 0 passes the tiled input through") {
  HigherOrderReservoir hqr(small_config(4, 2, 0.0));
  hqr.step(Eigen::VectorXd::Constant(4, 0.6));
  Eigen::VectorXd u(2);
  u << 0.25, 0.75;
  Eigen::VectorXd expected(4);
  expected << 0.25, 0.25, 0.75, 0.75;
  CHECK((hqr.mix_input_open(u) - expected).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("alpha = 1 uses only the feedback") {
  HigherOrderReservoir hqr(small_config(2, 1, 1.0));
  hqr.step(Eigen::VectorXd::Constant(2, 0.3));
  const Eigen::VectorXd expected = hqr.w_con() * hqr.z();
  const auto mixed = hqr.mix_input_open(Eigen::VectorXd::Constant(1, 0.9));
  CHECK((mixed - expected).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(mixed.minCoeff() >= 0.0);
  CHECK(mixed.maxCoeff() <= 1.0);
}

TEST_CASE("open-loop mixing by hand for two reservoirs") {
  auto cfg = small_config(2, 1, 0.5);
  cfg.n_qubits = 1;
  cfg.virtual_nodes = 1;
  HigherOrderReservoir hqr(cfg);
  Eigen::MatrixXd w(2, 2);
  w << 0.25, 0.75, 1.0, 0.0;
  hqr.set_w_con(w);
  // Inject u = 1 from the mixed state: σz = −1 always, so z = 0; then u = 0 gives z = 1.
  hqr.step(Eigen::Vector2d(1.0, 0.0));
  const Eigen::VectorXd z = hqr.z();
  const auto mixed = hqr.mix_input_open(Eigen::VectorXd::Constant(1, 0.4));
  CHECK(mixed(0) == doctest::Approx(0.5 * 0.4 + 0.5 * (0.25 * z(0) + 0.75 * z(1))));
  CHECK(mixed(1) == doctest::Approx(0.5 * 0.4 + 0.5 * z(0)));
}

TEST_CASE("closed-loop mixing") {
  auto cfg = small_config(2, 1, 0.0);
  cfg.n_qubits = 1;
  cfg.virtual_nodes = 2;
  HigherOrderReservoir hqr(cfg);
  hqr.step(Eigen::Vector2d(0.2, 0.9));
  const Eigen::VectorXd z = hqr.z();
  REQUIRE(z.size() == 4);

  readout::ReadoutWeights zero;
  zero.w = Eigen::MatrixXd::Zero(5, 1);
  CHECK_THROWS_AS(hqr.mix_input_closed(zero), StateError);
  const auto zero_rep = readout::replicate_weights(zero, hqr.tiling());
  CHECK(hqr.mix_input_closed(zero_rep).cwiseAbs().maxCoeff() == 0.0);

  readout::ReadoutWeights w;
  w.w.resize(5, 1);
  w.w << 0.1, 0.2, -0.3, 0.4, 0.5;
  const auto rep = readout::replicate_weights(w, hqr.tiling());
  const double pred = 0.1 + 0.2 * z(0) - 0.3 * z(1) + 0.4 * z(2) + 0.5 * z(3);
  const auto mixed = hqr.mix_input_closed(rep);
  CHECK(mixed(0) == doctest::Approx(std::clamp(pred, 0.0, 1.0)));
  CHECK(mixed(1) == doctest::Approx(std::clamp(pred, 0.0, 1.0)));

  cfg.alpha = 1.0;
  HigherOrderReservoir fb(cfg);
  fb.step(Eigen::Vector2d(0.2, 0.9));
  CHECK((fb.mix_input_closed(rep) - fb.w_con() * fb.z()).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("zero Hamiltonian on |0…0⟩ gives the scaled post-injection measurement") {
  auto cfg = small_config(2, 1, 0.0);
  cfg.n_qubits = 2;
  cfg.coupling_j = 0.0;
  HigherOrderReservoir hqr(cfg);
  for (int l = 0; l < 2; ++l) hqr.reservoir(l).set_state(DensityMatrix::basis_state(2, 0));
  const auto& z = hqr.step(Eigen::Vector2d(0.3, 0.8));
  // Qubit 1 holds the input, qubit 2 stays in |0⟩.
  for (int v = 0; v < cfg.virtual_nodes; ++v) {
    CHECK(z(v) == doctest::Approx(1.0 - 0.3));
    CHECK(z(cfg.virtual_nodes + v) == doctest::Approx(1.0));
    CHECK(z(8 + v) == doctest::Approx(1.0 - 0.8));
  }
}

TEST_CASE("with alpha = 0 the ensemble is the concatenation of solo reservoirs") {
  auto cfg = small_config(2, 2, 0.0);
  cfg.shared_hamiltonian = false;
  HigherOrderReservoir hqr(cfg);
  auto solo_cfg = cfg;
  solo_cfg.n_reservoirs = 1;
  solo_cfg.n_in = 1;
  auto solo0 = solo_cfg, solo1 = solo_cfg;
  solo1.seed = cfg.seed + 1;
  HigherOrderReservoir a(solo0), b(solo1);
  Pcg32 rng(8);
  for (int k = 0; k < 40; ++k) {
    Eigen::VectorXd u(2);
    u << rng.uniform01(), rng.uniform01();
    const auto& z = hqr.step(hqr.mix_input_open(u));
    a.step(a.mix_input_open(u.segment(0, 1)));
    b.step(b.mix_input_open(u.segment(1, 1)));
    REQUIRE((z.head(12) - a.z()).cwiseAbs().maxCoeff() <= 1e-12);
    REQUIRE((z.tail(12) - b.z()).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("z stays in [0, 1] and trajectories are deterministic") {
  HqrConfig cfg;  // defaults: 6 qubits, 5 reservoirs, V = 10
  HigherOrderReservoir a(cfg), b(cfg, kernels::Exec::kSerial);
  Pcg32 rng(9);
  for (int k = 0; k < 30; ++k) {
    const Eigen::VectorXd u = Eigen::VectorXd::Constant(1, rng.uniform01());
    const auto& za = a.step(a.mix_input_open(u));
    const auto& zb = b.step(b.mix_input_open(u));
    REQUIRE(za.minCoeff() >= 0.0);
    REQUIRE(za.maxCoeff() <= 1.0);
    REQUIRE((za.array() == zb.array()).all());
  }
}

TEST_CASE("washout consumes the requested inputs and forgets the initial state") {
  auto cfg = small_config(2, 1, 0.5);
  Pcg32 rng(10);
  Eigen::MatrixXd inputs(60, 1);
  for (Index k = 0; k < 60; ++k) inputs(k, 0) = rng.uniform01();

  HigherOrderReservoir untouched(cfg), zero_dl(cfg);
  zero_dl.washout(inputs, 0);
  CHECK(zero_dl.z() == untouched.z());
  CHECK_THROWS_AS(zero_dl.washout(inputs, 61), DomainError);

  HigherOrderReservoir a(cfg), b(cfg);
  for (int l = 0; l < 2; ++l) b.reservoir(l).set_state(DensityMatrix::basis_state(3, 5));
  a.step(a.mix_input_open(inputs.row(0).transpose()));
  b.step(b.mix_input_open(inputs.row(0).transpose()));
  const double initial = (a.z() - b.z()).norm();
  a.washout(inputs.bottomRows(59), 39);
  b.washout(inputs.bottomRows(59), 39);
  CHECK((a.z() - b.z()).norm() < initial);
}

TEST_CASE("checkpoint round-trips bit for bit") {
  auto cfg = small_config(2, 1, 0.5);
  HigherOrderReservoir hqr(cfg);
  Pcg32 rng(11);
  for (int k = 0; k < 5; ++k) hqr.step(hqr.mix_input_open(Eigen::VectorXd::Constant(1, rng.uniform01())));
  const auto bytes = hqr.checkpoint().to_bytes();
  HigherOrderReservoir copy(cfg);
  copy.restore(Checkpoint::from_bytes(bytes));
  for (int k = 0; k < 5; ++k) {
    const Eigen::VectorXd u = Eigen::VectorXd::Constant(1, rng.uniform01());
    REQUIRE((hqr.step(hqr.mix_input_open(u)).array() == copy.step(copy.mix_input_open(u)).array()).all());
  }
  auto broken = bytes;
  broken[0] = 'X';
  CHECK_THROWS_AS(Checkpoint::from_bytes(broken), ParseError);
}

TEST_CASE("clipping is idempotent and maps into the unit interval") {
  Eigen::VectorXd x(5);
  x << -3.0, -0.0, 0.4, 1.0, 7.5;
  const auto once = readout::clip_unit(x);
  CHECK((readout::clip_unit(once).array() == once.array()).all());
  CHECK(once.minCoeff() == 0.0);
  CHECK(once.maxCoeff() == 1.0);
}
