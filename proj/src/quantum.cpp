#include "hqrc/quantum.hpp"

#include <bit>
#include <cmath>
#include <string>

#include "hqrc/errors.hpp"
#include "hqrc/rng.hpp"

namespace hqrc::quantum {

using Eigen::Index;
using cplx = std::complex<double>;

namespace {

int qubits_for_dim(Index dim) {
  if (dim <= 0 || !std::has_single_bit(static_cast<std::uint64_t>(dim))) {
    throw DomainError("density matrix dimension " + std::to_string(dim) + " is not a power of two");
  }
  return std::countr_zero(static_cast<std::uint64_t>(dim));
}

double max_abs(const Eigen::MatrixXcd& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

}  // namespace

DensityMatrix::DensityMatrix(Eigen::MatrixXcd entries) : entries_(std::move(entries)) {
  if (entries_.rows() != entries_.cols()) throw DomainError("density matrix must be square");
  n_qubits_ = qubits_for_dim(entries_.rows());
}

DensityMatrix DensityMatrix::maximally_mixed(int n_qubits) {
  if (n_qubits < 1) throw DomainError("n_qubits must be >= 1");
  const Index d = Index{1} << n_qubits;
  return DensityMatrix(Eigen::MatrixXcd::Identity(d, d) / static_cast<double>(d));
}

DensityMatrix DensityMatrix::basis_state(int n_qubits, std::uint64_t index) {
  if (n_qubits < 1) throw DomainError("n_qubits must be >= 1");
  const Index d = Index{1} << n_qubits;
  if (index >= static_cast<std::uint64_t>(d)) throw DomainError("basis index out of range");
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(d, d);
  m(static_cast<Index>(index), static_cast<Index>(index)) = 1.0;
  return DensityMatrix(std::move(m));
}

double DensityMatrix::hermiticity_error() const { return max_abs(entries_ - entries_.adjoint()); }

double DensityMatrix::min_eigenvalue() const {
  const Eigen::MatrixXcd herm = 0.5 * (entries_ + entries_.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(herm, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericError("eigenvalue computation failed");
  return solver.eigenvalues().minCoeff();
}

void DensityMatrix::renormalize() {
  const double tr = entries_.trace().real();
  if (!(tr > 0.0) || !std::isfinite(tr)) throw NumericError("density matrix has non-positive trace");
  entries_ = (0.5 / tr) * (entries_ + entries_.adjoint()).eval();
}

IsingParams IsingParams::random(int n_qubits, double coupling_j, std::uint64_t seed) {
  if (n_qubits < 1) throw DomainError("n_qubits must be >= 1");
  IsingParams p;
  p.n_qubits = n_qubits;
  p.coupling_j = coupling_j;
  p.rng_seed = seed;
  p.couplings_h = Eigen::MatrixXd::Zero(n_qubits, n_qubits);
  p.fields_g = Eigen::VectorXd::Zero(n_qubits);
  Pcg32 rng(seed, streams::kIsing);
  for (int i = 0; i < n_qubits; ++i) {
    for (int j = i + 1; j < n_qubits; ++j) {
      const double h = rng.uniform(-1.0, 1.0);
      p.couplings_h(i, j) = h;
      p.couplings_h(j, i) = h;
    }
  }
  for (int j = 0; j < n_qubits; ++j) p.fields_g(j) = rng.uniform(-1.0, 1.0);
  return p;
}

void IsingParams::validate() const {
  if (n_qubits < 1) throw DomainError("n_qubits must be >= 1");
  if (couplings_h.rows() != n_qubits || couplings_h.cols() != n_qubits || fields_g.size() != n_qubits) {
    throw DomainError("Ising parameter shapes do not match n_qubits");
  }
  for (int i = 0; i < n_qubits; ++i) {
    if (couplings_h(i, i) != 0.0) throw DomainError("h must have a zero diagonal");
    if (!(std::abs(fields_g(i)) <= 1.0)) throw DomainError("g_j must lie in [-1, 1]");
    for (int j = 0; j < n_qubits; ++j) {
      if (couplings_h(i, j) != couplings_h(j, i)) throw DomainError("h must be symmetric");
      if (!(std::abs(couplings_h(i, j)) <= 1.0)) throw DomainError("h_ij must lie in [-1, 1]");
    }
  }
}

double UnitaryPropagator::unitarity_error() const {
  const Index d = entries.rows();
  return max_abs(entries.adjoint() * entries - Eigen::MatrixXcd::Identity(d, d));
}

HamiltonianSpectrum::HamiltonianSpectrum(const Eigen::MatrixXcd& hamiltonian) {
  if (hamiltonian.rows() != hamiltonian.cols()) throw DomainError("Hamiltonian must be square");
  const double scale = std::max(1.0, max_abs(hamiltonian));
  if (max_abs(hamiltonian - hamiltonian.adjoint()) > 1e-12 * scale) {
    throw DomainError("Hamiltonian is not Hermitian");
  }
  const Eigen::MatrixXcd herm = 0.5 * (hamiltonian + hamiltonian.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(herm);
  if (solver.info() != Eigen::Success) throw NumericError("Hamiltonian eigendecomposition failed");
  q_ = solver.eigenvectors();
  lambda_ = solver.eigenvalues();
}

UnitaryPropagator HamiltonianSpectrum::propagator(double dt) const {
  Eigen::VectorXcd phases(lambda_.size());
  for (Index k = 0; k < lambda_.size(); ++k) phases(k) = std::polar(1.0, -lambda_(k) * dt);
  UnitaryPropagator u;
  u.dt = dt;
  u.entries = q_ * phases.asDiagonal() * q_.adjoint();
  return u;
}

ObservableSet ObservableSet::pauli(int n_qubits, PauliAxis axis) {
  ObservableSet set;
  set.axis = axis;
  set.operators.reserve(static_cast<std::size_t>(n_qubits));
  for (int j = 1; j <= n_qubits; ++j) set.operators.push_back(embed_pauli(n_qubits, j, axis));
  return set;
}

Eigen::Matrix2cd pauli_matrix(PauliAxis axis) {
  Eigen::Matrix2cd m;
  switch (axis) {
    case PauliAxis::kX:
      m << 0, 1, 1, 0;
      break;
    case PauliAxis::kY:
      m << 0, cplx(0, -1), cplx(0, 1), 0;
      break;
    case PauliAxis::kZ:
      m << 1, 0, 0, -1;
      break;
  }
  return m;
}

Eigen::MatrixXcd embed_pauli(int n_qubits, int site, PauliAxis axis) {
  if (n_qubits < 1 || n_qubits > 16) throw DomainError("n_qubits out of supported range");
  if (site < 1 || site > n_qubits) {
    throw DomainError("site " + std::to_string(site) + " outside 1.." + std::to_string(n_qubits));
  }
  const Index d = Index{1} << n_qubits;
  const Index mask = Index{1} << (n_qubits - site);
  const Eigen::Matrix2cd sigma = pauli_matrix(axis);
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(d, d);
  for (Index col = 0; col < d; ++col) {
    const int in_bit = (col & mask) ? 1 : 0;
    for (int out_bit = 0; out_bit < 2; ++out_bit) {
      const cplx v = sigma(out_bit, in_bit);
      if (v == cplx(0.0)) continue;
      const Index row = out_bit ? (col | mask) : (col & ~mask);
      out(row, col) = v;
    }
  }
  return out;
}

Eigen::MatrixXcd build_hamiltonian(const IsingParams& params) {
  params.validate();
  const int n = params.n_qubits;
  const Index d = Index{1} << n;
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(d, d);
  auto bit = [n](int site) { return Index{1} << (n - 1 - site); };
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const double c = params.coupling_j * params.couplings_h(i, j);
      if (c == 0.0) continue;
      const Index flip = bit(i) | bit(j);
      for (Index col = 0; col < d; ++col) h(col ^ flip, col) += c;
    }
  }
  for (Index k = 0; k < d; ++k) {
    double diag = 0.0;
    for (int j = 0; j < n; ++j) diag += params.fields_g(j) * ((k & bit(j)) ? -1.0 : 1.0);
    h(k, k) += params.coupling_j * diag;
  }
  return h;
}

UnitaryPropagator propagator(const Eigen::MatrixXcd& hamiltonian, double dt) {
  return HamiltonianSpectrum(hamiltonian).propagator(dt);
}

DensityMatrix inject_input(const DensityMatrix& rho, double u) {
  if (!(u >= 0.0 && u <= 1.0)) throw DomainError("injected input must lie in [0, 1]");
  const Index d = rho.dim();
  const Index half = d / 2;
  const auto& m = rho.entries();
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(d, d);
  if (rho.n_qubits() == 1) {
    const cplx tr = m.trace();
    out(0, 0) = (1.0 - u) * tr;
    out(1, 1) = u * tr;
  } else {
    const Eigen::MatrixXcd reduced = m.topLeftCorner(half, half) + m.bottomRightCorner(half, half);
    out.topLeftCorner(half, half) = (1.0 - u) * reduced;
    out.bottomRightCorner(half, half) = u * reduced;
  }
  return DensityMatrix(std::move(out));
}

DensityMatrix partial_trace_first(const DensityMatrix& rho) {
  if (rho.n_qubits() < 2) throw DomainError("partial trace needs at least two qubits");
  const Index half = rho.dim() / 2;
  const auto& m = rho.entries();
  return DensityMatrix(m.topLeftCorner(half, half) + m.bottomRightCorner(half, half));
}

DensityMatrix evolve(const DensityMatrix& rho, const UnitaryPropagator& u, kernels::Exec exec) {
  if (u.entries.rows() != rho.dim() || u.entries.cols() != rho.dim()) {
    throw DomainError("propagator and density matrix dimensions differ");
  }
  return DensityMatrix(kernels::conjugate(u.entries, rho.entries(), exec));
}

Eigen::VectorXd measure(const DensityMatrix& rho, const ObservableSet& observables) {
  Eigen::VectorXd s(static_cast<Index>(observables.size()));
  for (std::size_t j = 0; j < observables.size(); ++j) {
    const auto& op = observables.operators[j];
    if (op.rows() != rho.dim() || op.cols() != rho.dim()) throw DomainError("observable dimension mismatch");
    s(static_cast<Index>(j)) = rho.entries().cwiseProduct(op.transpose()).sum().real();
  }
  return s;
}

}  // namespace hqrc::quantum
