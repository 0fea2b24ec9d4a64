#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "hqrc/kernels.hpp"
#include "hqrc/quantum.hpp"
#include "hqrc/readout.hpp"

namespace hqrc::reservoir {

/// Everything about one reservoir that stays fixed after construction. Built
/// once and shared between reservoirs that use the same Hamiltonian.
///
/// The reservoir state is kept in the Hamiltonian eigenbasis, where one τ/V
/// propagation is an elementwise phase multiply. `propagator` is the same
/// map expressed in the computational basis.
struct ReservoirDynamics {
  quantum::IsingParams params;
  double tau = 0.0;
  int v_nodes = 0;
  quantum::UnitaryPropagator propagator;  // dt = tau / v_nodes
  quantum::ObservableSet observables;

  Eigen::MatrixXcd q;                       // eigenvectors of H
  Eigen::MatrixXcd phase;                   // exp(−i(λa − λb) dt)
  std::vector<Eigen::MatrixXcd> rotated_t;  // (Q† O_j Q)ᵀ

  static std::shared_ptr<const ReservoirDynamics> create(const quantum::IsingParams& params, double tau,
                                                         int v_nodes);

  int n_qubits() const { return params.n_qubits; }
  Eigen::Index dim() const { return q.rows(); }
  /// V · N.
  Eigen::Index n_signals() const { return static_cast<Eigen::Index>(v_nodes) * params.n_qubits; }
};

/// One quantum reservoir with temporal multiplexing. Starts maximally mixed.
class QuantumReservoir {
 public:
  explicit QuantumReservoir(std::shared_ptr<const ReservoirDynamics> dynamics);

  const ReservoirDynamics& dynamics() const { return *dynamics_; }

  /// Injects u, then runs V substeps of τ/V, measuring every observable after
  /// each. Returns raw ⟨σᶻ⟩ signals with index (j−1)·V + (v−1).
  Eigen::VectorXd substep_evolve(double u);

  /// State in the computational basis.
  quantum::DensityMatrix state() const;
  void set_state(const quantum::DensityMatrix& rho);
  void reset();

  /// Exact internal representation, for bit-faithful checkpoints.
  const Eigen::MatrixXcd& eigenbasis_state() const { return rho_eig_; }
  void set_eigenbasis_state(const Eigen::MatrixXcd& rho_eig);

 private:
  std::shared_ptr<const ReservoirDynamics> dynamics_;
  Eigen::MatrixXcd rho_eig_;
};

struct HqrConfig {
  int n_qubits = 6;
  int n_reservoirs = 5;
  double coupling_j = 2.0;
  double tau = 4.0;
  int virtual_nodes = 10;
  double alpha = 0.5;
  int n_in = 1;
  /// All reservoirs share one Hamiltonian; otherwise reservoir l draws with seed + l.
  bool shared_hamiltonian = true;
  std::uint64_t seed = 0;
};

/// Snapshot of the mutable part of a HigherOrderReservoir.
struct Checkpoint {
  Eigen::VectorXd z;
  std::vector<Eigen::MatrixXcd> states;  // eigenbasis representation

  /// "HQCK" | u32 version=1 | u64 n_reservoirs | u64 dim | u64 n_total
  /// | z (f64 × n_total) | per reservoir: dim×dim (re, im) f64 pairs, row-major.
  std::vector<std::uint8_t> to_bytes() const;
  static Checkpoint from_bytes(std::span<const std::uint8_t> bytes);
};

/// Ensemble of quantum reservoirs coupled through a fixed feedback matrix.
class HigherOrderReservoir {
 public:
  explicit HigherOrderReservoir(const HqrConfig& config, kernels::Exec exec = kernels::Exec::kParallel);

  const HqrConfig& config() const { return config_; }
  int n_in() const { return config_.n_in; }
  int n_reservoirs() const { return static_cast<int>(reservoirs_.size()); }
  Eigen::Index n_total() const { return z_.size(); }
  double alpha() const { return config_.alpha; }
  const std::vector<int>& tiling() const { return tiling_; }
  const Eigen::MatrixXd& w_con() const { return w_con_; }
  void set_w_con(const Eigen::MatrixXd& w_con);
  const Eigen::VectorXd& z() const { return z_; }
  QuantumReservoir& reservoir(int l) { return reservoirs_.at(static_cast<std::size_t>(l)); }
  const QuantumReservoir& reservoir(int l) const { return reservoirs_.at(static_cast<std::size_t>(l)); }
  void set_exec(kernels::Exec exec) { exec_ = exec; }

  /// clip((1−α) W_in u + α W_con z).
  Eigen::VectorXd mix_input_open(const Eigen::VectorXd& u) const;
  /// clip((1−α) W′ᵀ[1; z] + α W_con z) with replicated readout weights.
  Eigen::VectorXd mix_input_closed(const readout::ReadoutWeights& weights) const;

  /// Evolves every reservoir with its mixed input and refreshes z ← (signals + 1)/2.
  const Eigen::VectorXd& step(const Eigen::VectorXd& u_mixed);

  /// Runs the first `dl` rows of `inputs` (time × N_in) open loop.
  void washout(const Eigen::MatrixXd& inputs, int dl);

  /// Back to maximally mixed states and z = 0.
  void reset();

  Checkpoint checkpoint() const;
  void restore(const Checkpoint& cp);

 private:
  HqrConfig config_;
  kernels::Exec exec_;
  std::vector<QuantumReservoir> reservoirs_;
  std::vector<int> tiling_;
  Eigen::MatrixXd w_con_;
  Eigen::VectorXd z_;
};

/// Reservoir l reads input component ⌊l · N_in / N_qrc⌋.
std::vector<int> block_tiling(int n_reservoirs, int n_in);

/// Uniform [0, 1) entries, each row normalized to sum 1.
Eigen::MatrixXd random_feedback(int n_reservoirs, Eigen::Index n_total, std::uint64_t seed);

}  // namespace hqrc::reservoir
