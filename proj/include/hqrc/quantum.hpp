#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "hqrc/kernels.hpp"

namespace hqrc::quantum {

enum class PauliAxis { kX, kY, kZ };

/// Density matrix of an N-qubit register, stored as a dense 2^N × 2^N
/// complex matrix. Qubit 1 is the most significant tensor factor.
class DensityMatrix {
 public:
  DensityMatrix() = default;
  explicit DensityMatrix(Eigen::MatrixXcd entries);

  /// I / 2^N.
  static DensityMatrix maximally_mixed(int n_qubits);
  /// |b⟩⟨b| for a computational basis index b.
  static DensityMatrix basis_state(int n_qubits, std::uint64_t index);

  int n_qubits() const { return n_qubits_; }
  Eigen::Index dim() const { return entries_.rows(); }
  const Eigen::MatrixXcd& entries() const { return entries_; }
  Eigen::MatrixXcd& mutable_entries() { return entries_; }

  std::complex<double> trace() const { return entries_.trace(); }
  /// max |ρᵢⱼ − conj(ρⱼᵢ)|.
  double hermiticity_error() const;
  /// Smallest eigenvalue of the Hermitian part.
  double min_eigenvalue() const;

  /// Divides by the real trace and replaces ρ by (ρ + ρ†)/2.
  void renormalize();

 private:
  Eigen::MatrixXcd entries_;
  int n_qubits_ = 0;
};

/// Fully connected transverse-field Ising model parameters.
struct IsingParams {
  int n_qubits = 0;
  double coupling_j = 1.0;
  Eigen::MatrixXd couplings_h;  // symmetric, zero diagonal
  Eigen::VectorXd fields_g;
  std::uint64_t rng_seed = 0;

  /// Draws h (upper triangle, row-major, mirrored) then g from U[-1, 1).
  static IsingParams random(int n_qubits, double coupling_j, std::uint64_t seed);
  /// Throws DomainError when the symmetric/zero-diagonal/range invariants fail.
  void validate() const;
};

struct UnitaryPropagator {
  Eigen::MatrixXcd entries;
  double dt = 0.0;

  double unitarity_error() const;
};

/// Eigendecomposition H = Q Λ Q† computed once; propagators for any dt are
/// assembled from it.
class HamiltonianSpectrum {
 public:
  explicit HamiltonianSpectrum(const Eigen::MatrixXcd& hamiltonian);

  const Eigen::MatrixXcd& eigenvectors() const { return q_; }
  const Eigen::VectorXd& eigenvalues() const { return lambda_; }
  UnitaryPropagator propagator(double dt) const;

 private:
  Eigen::MatrixXcd q_;
  Eigen::VectorXd lambda_;
};

struct ObservableSet {
  PauliAxis axis = PauliAxis::kZ;
  std::vector<Eigen::MatrixXcd> operators;

  /// σ^axis_j for j = 1..N.
  static ObservableSet pauli(int n_qubits, PauliAxis axis = PauliAxis::kZ);
  std::size_t size() const { return operators.size(); }
};

/// Single-qubit Pauli matrix.
Eigen::Matrix2cd pauli_matrix(PauliAxis axis);

/// I ⊗ … ⊗ σ^axis ⊗ … ⊗ I with σ at 1-based `site`.
Eigen::MatrixXcd embed_pauli(int n_qubits, int site, PauliAxis axis);

/// H = J Σ_{i≠j} h_ij σˣᵢσˣⱼ + J Σ_j g_j σᶻⱼ. The double sum visits each
/// unordered pair twice.
Eigen::MatrixXcd build_hamiltonian(const IsingParams& params);

/// U = exp(−i H dt) through the Hermitian eigendecomposition.
UnitaryPropagator propagator(const Eigen::MatrixXcd& hamiltonian, double dt);

/// ρ_u ⊗ Tr₁[ρ] with ρ_u = (1−u)|0⟩⟨0| + u|1⟩⟨1|.
DensityMatrix inject_input(const DensityMatrix& rho, double u);

/// Trace over the first (most significant) qubit.
DensityMatrix partial_trace_first(const DensityMatrix& rho);

/// U ρ U†.
DensityMatrix evolve(const DensityMatrix& rho, const UnitaryPropagator& u,
                     kernels::Exec exec = kernels::Exec::kParallel);

/// s_j = Re Tr[ρ O_j].
Eigen::VectorXd measure(const DensityMatrix& rho, const ObservableSet& observables);

}  // namespace hqrc::quantum
