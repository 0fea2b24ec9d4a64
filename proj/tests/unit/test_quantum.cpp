#include <cmath>
#include <numbers>

#include "doctest.h"
#include "hqrc/errors.hpp"
#include "hqrc/quantum.hpp"
#include "oracles.hpp"

using namespace hqrc;
using namespace hqrc::quantum;
using Eigen::Index;
using cd = std::complex<double>;

TEST_CASE("embed_pauli on one qubit is the Pauli matrix") {
  Eigen::Matrix2cd z;
  z << 1, 0, 0, -1;
  CHECK((embed_pauli(1, 1, PauliAxis::kZ) - z).norm() == 0.0);
}

TEST_CASE("embed_pauli(2, 2, x) is I ⊗ σx") {
  Eigen::Matrix4cd expected;
  expected << 0, 1, 0, 0, 1, 0, 0, 0, 0, 0, 0, 1, 0, 0, 1, 0;
  CHECK((embed_pauli(2, 2, PauliAxis::kX) - expected).norm() == 0.0);
}

TEST_CASE("embed_pauli matches a three-loop Kronecker product") {
  const char names[] = {'x', 'y', 'z'};
  const PauliAxis axes[] = {PauliAxis::kX, PauliAxis::kY, PauliAxis::kZ};
  for (int n = 1; n <= 4; ++n)
    for (int site = 1; site <= n; ++site)
      for (int a = 0; a < 3; ++a)
        CHECK((embed_pauli(n, site, axes[a]) - oracle::embed(n, site, names[a])).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("embed_pauli rejects out-of-range sites") {
  CHECK_THROWS_AS(embed_pauli(3, 0, PauliAxis::kZ), DomainError);
  CHECK_THROWS_AS(embed_pauli(3, 4, PauliAxis::kZ), DomainError);
}

TEST_CASE("single-qubit Hamiltonian is J·g·σz") {
  IsingParams p;
  p.n_qubits = 1;
  p.coupling_j = 2.0;
  p.couplings_h = Eigen::MatrixXd::Zero(1, 1);
  p.fields_g = Eigen::VectorXd::Constant(1, 0.5);
  Eigen::Matrix2cd expected;
  expected << 1, 0, 0, -1;
  CHECK((build_hamiltonian(p) - expected).norm() < 1e-15);
}

TEST_CASE("two-qubit coupling counts the pair twice") {
  IsingParams p;
  p.n_qubits = 2;
  p.coupling_j = 1.0;
  p.couplings_h = Eigen::MatrixXd::Zero(2, 2);
  p.couplings_h(0, 1) = p.couplings_h(1, 0) = 1.0;
  p.fields_g = Eigen::VectorXd::Zero(2);
  const Eigen::MatrixXcd xx = oracle::kron(oracle::pauli('x'), oracle::pauli('x'));
  CHECK((build_hamiltonian(p) - 2.0 * xx).norm() < 1e-15);
}

TEST_CASE("random Ising draws respect their invariants") {
  for (int n = 1; n <= 6; ++n) {
    const auto p = IsingParams::random(n, 2.0, 100 + n);
    CHECK(p.couplings_h.isApprox(p.couplings_h.transpose()));
    CHECK(p.couplings_h.diagonal().cwiseAbs().maxCoeff() == 0.0);
    CHECK(p.couplings_h.cwiseAbs().maxCoeff() <= 1.0);
    CHECK(p.fields_g.cwiseAbs().maxCoeff() <= 1.0);
    CHECK_NOTHROW(p.validate());
  }
  const auto a = IsingParams::random(4, 2.0, 9), b = IsingParams::random(4, 2.0, 9);
  CHECK(a.couplings_h == b.couplings_h);
  CHECK(a.fields_g == b.fields_g);
}

TEST_CASE("Hamiltonian matches brute-force Pauli summation for N <= 4") {
  for (int n = 1; n <= 4; ++n)
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto p = IsingParams::random(n, 2.0, seed);
      CHECK((build_hamiltonian(p) - oracle::hamiltonian(p)).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("propagator of the zero Hamiltonian is the identity") {
  const auto u = propagator(Eigen::MatrixXcd::Zero(4, 4), 4.0);
  CHECK((u.entries - Eigen::MatrixXcd::Identity(4, 4)).norm() < 1e-15);
}

TEST_CASE("propagator of σz over π is −I") {
  Eigen::MatrixXcd z(2, 2);
  z << 1, 0, 0, -1;
  const auto u = propagator(z, std::numbers::pi);
  CHECK((u.entries + Eigen::MatrixXcd::Identity(2, 2)).norm() < 1e-14);
}

TEST_CASE("propagator matches a Taylor-series exponential") {
  Pcg32 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const auto h = oracle::random_hermitian(8, rng);
    const auto u = propagator(h, 0.7);
    const Eigen::MatrixXcd ref = oracle::expm_taylor(cd(0, -0.7) * h);
    CHECK((u.entries - ref).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK(u.unitarity_error() <= 1e-10);
  }
}

TEST_CASE("propagators compose as a semigroup") {
  const auto p = IsingParams::random(4, 2.0, 3);
  const auto h = build_hamiltonian(p);
  const auto a = propagator(h, 0.3), b = propagator(h, 1.1), ab = propagator(h, 1.4);
  CHECK((a.entries * b.entries - ab.entries).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("propagator rejects non-Hermitian input") {
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(2, 2);
  m(0, 1) = 1.0;
  CHECK_THROWS_AS(propagator(m, 1.0), DomainError);
}

TEST_CASE("injecting u = 0 puts the first qubit in |0⟩") {
  Pcg32 rng(6);
  const DensityMatrix rho(oracle::random_density(3, rng));
  const auto out = inject_input(rho, 0.0);
  CHECK(measure(out, ObservableSet::pauli(3))(0) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("maximally mixed state is a fixed point of injection at u = 1/2") {
  const auto rho = DensityMatrix::maximally_mixed(3);
  CHECK((inject_input(rho, 0.5).entries() - rho.entries()).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("σz₁ after injection equals 1 − 2u") {
  Pcg32 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(4));
    const DensityMatrix rho(oracle::random_density(n, rng));
    const double u = rng.uniform01();
    const auto out = inject_input(rho, u);
    CHECK(std::abs(measure(out, ObservableSet::pauli(n))(0) - (1.0 - 2.0 * u)) <= 1e-12);
    CHECK(std::abs(oracle::expectation(out.entries(), oracle::embed(n, 1, 'z')) - (1.0 - 2.0 * u)) <= 1e-12);
    CHECK(std::abs(out.trace() - cd(1.0)) <= 1e-12);
  }
}

TEST_CASE("injection equals ρ_u ⊗ Tr₁ρ") {
  Pcg32 rng(8);
  const Eigen::MatrixXcd rho = oracle::random_density(3, rng);
  Eigen::MatrixXcd rho_u = Eigen::MatrixXcd::Zero(2, 2);
  rho_u(0, 0) = 0.7;
  rho_u(1, 1) = 0.3;
  const Eigen::MatrixXcd expected = oracle::kron(rho_u, oracle::partial_trace_first(rho));
  CHECK((inject_input(DensityMatrix(rho), 0.3).entries() - expected).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("injection rejects amplitudes outside [0, 1]") {
  const auto rho = DensityMatrix::maximally_mixed(2);
  CHECK_THROWS_AS(inject_input(rho, -0.01), DomainError);
  CHECK_THROWS_AS(inject_input(rho, 1.01), DomainError);
  CHECK_THROWS_AS(inject_input(rho, std::nan("")), DomainError);
}

TEST_CASE("partial trace of |00⟩⟨00| is |0⟩⟨0|") {
  const auto out = partial_trace_first(DensityMatrix::basis_state(2, 0));
  CHECK((out.entries() - DensityMatrix::basis_state(1, 0).entries()).norm() == 0.0);
}

TEST_CASE("partial trace of a product state returns the second factor") {
  Pcg32 rng(9);
  const Eigen::MatrixXcd a = oracle::random_density(1, rng), b = oracle::random_density(2, rng);
  const auto out = partial_trace_first(DensityMatrix(oracle::kron(a, b)));
  CHECK((out.entries() - b).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("partial trace matches the index-summation oracle") {
  Pcg32 rng(10);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::MatrixXcd rho = oracle::random_density(3, rng);
    const auto out = partial_trace_first(DensityMatrix(rho));
    CHECK((out.entries() - oracle::partial_trace_first(rho)).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(std::abs(out.trace() - cd(1.0)) < 1e-12);
    CHECK(out.hermiticity_error() < 1e-14);
  }
  CHECK_THROWS_AS(partial_trace_first(DensityMatrix::maximally_mixed(1)), DomainError);
}

TEST_CASE("evolution with the identity or on the maximally mixed state changes nothing") {
  Pcg32 rng(11);
  const DensityMatrix rho(oracle::random_density(3, rng));
  UnitaryPropagator id{Eigen::MatrixXcd::Identity(8, 8), 1.0};
  CHECK((evolve(rho, id).entries() - rho.entries()).cwiseAbs().maxCoeff() < 1e-15);
  const auto u = propagator(oracle::random_hermitian(8, rng), 0.9);
  const auto mixed = DensityMatrix::maximally_mixed(3);
  CHECK((evolve(mixed, u).entries() - mixed.entries()).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("evolution preserves trace and spectrum") {
  Pcg32 rng(12);
  const DensityMatrix rho(oracle::random_density(4, rng));
  const auto u = propagator(oracle::random_hermitian(16, rng), 1.3);
  for (auto exec : {kernels::Exec::kSerial, kernels::Exec::kParallel}) {
    const auto out = evolve(rho, u, exec);
    CHECK(std::abs(out.trace() - rho.trace()) < 1e-10);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> a(rho.entries()), b(out.entries());
    CHECK((a.eigenvalues() - b.eigenvalues()).cwiseAbs().maxCoeff() < 1e-10);
  }
  UnitaryPropagator wrong{Eigen::MatrixXcd::Identity(4, 4), 1.0};
  CHECK_THROWS_AS(evolve(rho, wrong), DomainError);
}

TEST_CASE("measurement of basis and mixed states") {
  const auto zeros = measure(DensityMatrix::basis_state(4, 0), ObservableSet::pauli(4));
  CHECK((zeros.array() - 1.0).abs().maxCoeff() == 0.0);
  const auto mixed = measure(DensityMatrix::maximally_mixed(4), ObservableSet::pauli(4));
  CHECK(mixed.cwiseAbs().maxCoeff() < 1e-15);
  // |0101⟩: qubits 2 and 4 flipped.
  const auto s = measure(DensityMatrix::basis_state(4, 0b0101), ObservableSet::pauli(4));
  CHECK(s(0) == 1.0);
  CHECK(s(1) == -1.0);
  CHECK(s(2) == 1.0);
  CHECK(s(3) == -1.0);
}

TEST_CASE("measurement matches the double-loop trace") {
  Pcg32 rng(13);
  const Eigen::MatrixXcd rho = oracle::random_density(3, rng);
  const auto s = measure(DensityMatrix(rho), ObservableSet::pauli(3));
  for (int j = 1; j <= 3; ++j) {
    CHECK(std::abs(s(j - 1) - oracle::expectation(rho, oracle::embed(3, j, 'z'))) < 1e-14);
    CHECK(std::abs(s(j - 1)) <= 1.0);
  }
}

TEST_CASE("density matrix validation") {
  CHECK_THROWS_AS(DensityMatrix(Eigen::MatrixXcd::Identity(3, 3)), DomainError);
  CHECK_THROWS_AS(DensityMatrix(Eigen::MatrixXcd::Identity(2, 4)), DomainError);
  const auto rho = DensityMatrix::maximally_mixed(3);
  CHECK(rho.n_qubits() == 3);
  CHECK(rho.min_eigenvalue() == doctest::Approx(0.125));
}

TEST_CASE("Pauli z observables are Hermitian with ±1 spectrum") {
  const auto obs = ObservableSet::pauli(3);
  REQUIRE(obs.size() == 3);
  for (const auto& o : obs.operators) {
    CHECK((o - o.adjoint()).norm() == 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(o);
    CHECK(((es.eigenvalues().array().abs() - 1.0).abs()).maxCoeff() < 1e-14);
  }
}

TEST_CASE("chained injection and evolution keeps the trace for 1000 steps") {
  const auto p = IsingParams::random(3, 2.0, 14);
  const auto u = propagator(build_hamiltonian(p), 0.4);
  Pcg32 rng(15);
  DensityMatrix rho(oracle::random_density(3, rng));
  for (int k = 0; k < 1000; ++k) {
    rho = evolve(inject_input(rho, rng.uniform01()), u);
    REQUIRE(std::abs(rho.trace() - cd(1.0)) <= 1e-9);
  }
  CHECK(rho.hermiticity_error() <= 1e-10);
  CHECK(rho.min_eigenvalue() >= -1e-9);
}
