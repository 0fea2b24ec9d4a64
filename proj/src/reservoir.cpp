#include "hqrc/reservoir.hpp"

#include <cmath>
#include <exception>
#include <string>

#include "hqrc/binary_io.hpp"
#include "hqrc/errors.hpp"
#include "hqrc/rng.hpp"

namespace hqrc::reservoir {

using Eigen::Index;
using quantum::DensityMatrix;

std::shared_ptr<const ReservoirDynamics> ReservoirDynamics::create(const quantum::IsingParams& params, double tau,
                                                                   int v_nodes) {
  if (v_nodes < 1) throw DomainError("virtual node count must be >= 1");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw DomainError("tau must be positive");
  auto dyn = std::make_shared<ReservoirDynamics>();
  dyn->params = params;
  dyn->tau = tau;
  dyn->v_nodes = v_nodes;
  const double dt = tau / v_nodes;

  const quantum::HamiltonianSpectrum spectrum(quantum::build_hamiltonian(params));
  dyn->propagator = spectrum.propagator(dt);
  dyn->observables = quantum::ObservableSet::pauli(params.n_qubits, quantum::PauliAxis::kZ);
  dyn->q = spectrum.eigenvectors();

  const auto& lambda = spectrum.eigenvalues();
  const Index d = lambda.size();
  dyn->phase.resize(d, d);
  for (Index b = 0; b < d; ++b)
    for (Index a = 0; a < d; ++a) dyn->phase(a, b) = std::polar(1.0, -(lambda(a) - lambda(b)) * dt);

  dyn->rotated_t.reserve(dyn->observables.size());
  for (const auto& op : dyn->observables.operators) {
    dyn->rotated_t.push_back((dyn->q.adjoint() * op * dyn->q).transpose());
  }
  return dyn;
}

QuantumReservoir::QuantumReservoir(std::shared_ptr<const ReservoirDynamics> dynamics)
    : dynamics_(std::move(dynamics)) {
  reset();
}

void QuantumReservoir::reset() {
  // Maximally mixed is basis independent.
  const Index d = dynamics_->dim();
  rho_eig_ = Eigen::MatrixXcd::Identity(d, d) / static_cast<double>(d);
}

DensityMatrix QuantumReservoir::state() const {
  return DensityMatrix(dynamics_->q * rho_eig_ * dynamics_->q.adjoint());
}

void QuantumReservoir::set_state(const DensityMatrix& rho) {
  if (rho.dim() != dynamics_->dim()) throw DomainError("state dimension does not match reservoir");
  rho_eig_ = dynamics_->q.adjoint() * rho.entries() * dynamics_->q;
}

void QuantumReservoir::set_eigenbasis_state(const Eigen::MatrixXcd& rho_eig) {
  if (rho_eig.rows() != dynamics_->dim() || rho_eig.cols() != dynamics_->dim()) {
    throw DomainError("state dimension does not match reservoir");
  }
  rho_eig_ = rho_eig;
}

Eigen::VectorXd QuantumReservoir::substep_evolve(double u) {
  if (!(u >= 0.0 && u <= 1.0)) throw DomainError("injected input must lie in [0, 1]");
  const auto& dyn = *dynamics_;
  const Index d = dyn.dim();
  const Index half = d / 2;
  const auto q0 = dyn.q.topRows(half);
  const auto q1 = dyn.q.bottomRows(half);

  // Tr₁ of the computational-basis state: Σ_b Q_b ρ̃ Q_b†.
  Eigen::MatrixXcd reduced = (q0 * rho_eig_) * q0.adjoint();
  reduced.noalias() += (q1 * rho_eig_) * q1.adjoint();

  // ρ_u ⊗ R back in the eigenbasis.
  Eigen::MatrixXcd injected = (1.0 - u) * (q0.adjoint() * (reduced * q0));
  injected.noalias() += u * (q1.adjoint() * (reduced * q1));

  const double tr = injected.trace().real();
  if (!(tr > 0.0) || !std::isfinite(tr)) throw NumericError("reservoir state lost its trace");
  rho_eig_ = (0.5 / tr) * (injected + injected.adjoint());

  const int n = dyn.n_qubits();
  const int v_nodes = dyn.v_nodes;
  Eigen::VectorXd signals(static_cast<Index>(n) * v_nodes);
  for (int v = 0; v < v_nodes; ++v) {
    rho_eig_.array() *= dyn.phase.array();
    for (int j = 0; j < n; ++j) {
      signals(static_cast<Index>(j) * v_nodes + v) =
          rho_eig_.cwiseProduct(dyn.rotated_t[static_cast<std::size_t>(j)]).sum().real();
    }
  }
  return signals;
}

std::vector<int> block_tiling(int n_reservoirs, int n_in) {
  if (n_in < 1 || n_reservoirs < 1 || n_reservoirs % n_in != 0) {
    throw DomainError("input dimension " + std::to_string(n_in) + " must divide reservoir count " +
                      std::to_string(n_reservoirs));
  }
  std::vector<int> tiling(static_cast<std::size_t>(n_reservoirs));
  for (int l = 0; l < n_reservoirs; ++l) tiling[static_cast<std::size_t>(l)] = l * n_in / n_reservoirs;
  return tiling;
}

Eigen::MatrixXd random_feedback(int n_reservoirs, Index n_total, std::uint64_t seed) {
  Pcg32 rng(seed, streams::kFeedback);
  Eigen::MatrixXd w(n_reservoirs, n_total);
  for (int l = 0; l < n_reservoirs; ++l) {
    for (Index c = 0; c < n_total; ++c) w(l, c) = rng.uniform01();
    w.row(l) /= w.row(l).sum();
  }
  return w;
}

HigherOrderReservoir::HigherOrderReservoir(const HqrConfig& config, kernels::Exec exec)
    : config_(config), exec_(exec) {
  if (config.n_qubits < 1 || config.n_qubits > 12) throw DomainError("qubit count must be in 1..12");
  if (!(config.alpha >= 0.0 && config.alpha <= 1.0)) throw DomainError("alpha must lie in [0, 1]");
  tiling_ = block_tiling(config.n_reservoirs, config.n_in);

  std::shared_ptr<const ReservoirDynamics> shared;
  reservoirs_.reserve(static_cast<std::size_t>(config.n_reservoirs));
  for (int l = 0; l < config.n_reservoirs; ++l) {
    if (config.shared_hamiltonian) {
      if (!shared) {
        shared = ReservoirDynamics::create(
            quantum::IsingParams::random(config.n_qubits, config.coupling_j, config.seed), config.tau,
            config.virtual_nodes);
      }
      reservoirs_.emplace_back(shared);
    } else {
      reservoirs_.emplace_back(ReservoirDynamics::create(
          quantum::IsingParams::random(config.n_qubits, config.coupling_j, config.seed + static_cast<unsigned>(l)),
          config.tau, config.virtual_nodes));
    }
  }
  const Index n_total = static_cast<Index>(config.n_reservoirs) * config.n_qubits * config.virtual_nodes;
  w_con_ = random_feedback(config.n_reservoirs, n_total, config.seed);
  z_ = Eigen::VectorXd::Zero(n_total);
}

void HigherOrderReservoir::set_w_con(const Eigen::MatrixXd& w_con) {
  if (w_con.rows() != n_reservoirs() || w_con.cols() != n_total()) throw DomainError("W_con has the wrong shape");
  w_con_ = w_con;
}

Eigen::VectorXd HigherOrderReservoir::mix_input_open(const Eigen::VectorXd& u) const {
  if (u.size() != config_.n_in) throw DomainError("input dimension mismatch");
  Eigen::VectorXd tiled(n_reservoirs());
  for (int l = 0; l < n_reservoirs(); ++l) tiled(l) = u(tiling_[static_cast<std::size_t>(l)]);
  const double a = config_.alpha;
  return readout::clip_unit((1.0 - a) * tiled + a * (w_con_ * z_));
}

Eigen::VectorXd HigherOrderReservoir::mix_input_closed(const readout::ReadoutWeights& weights) const {
  if (!weights.trained()) throw StateError("closed-loop mixing needs trained readout weights");
  if (!weights.replicated || weights.replicated->cols() != n_reservoirs()) {
    throw StateError("closed-loop mixing needs weights replicated over the reservoir tiling");
  }
  const double a = config_.alpha;
  return readout::clip_unit((1.0 - a) * readout::apply_replicated(weights, z_) + a * (w_con_ * z_));
}

const Eigen::VectorXd& HigherOrderReservoir::step(const Eigen::VectorXd& u_mixed) {
  const int n_res = n_reservoirs();
  if (u_mixed.size() != n_res) throw DomainError("mixed input must have one entry per reservoir");
  const Index width = static_cast<Index>(config_.n_qubits) * config_.virtual_nodes;
  Eigen::VectorXd raw(z_.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(static) if (exec_ == kernels::Exec::kParallel && n_res > 1)
  for (int l = 0; l < n_res; ++l) {
    try {
      raw.segment(l * width, width) = reservoirs_[static_cast<std::size_t>(l)].substep_evolve(u_mixed(l));
    } catch (...) {
#pragma omp critical(hqrc_step_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  z_ = (raw.array() + 1.0) * 0.5;
  return z_;
}

void HigherOrderReservoir::washout(const Eigen::MatrixXd& inputs, int dl) {
  if (dl < 0) throw DomainError("washout length must be >= 0");
  if (dl > inputs.rows()) throw DomainError("washout needs " + std::to_string(dl) + " inputs, got " +
                                            std::to_string(inputs.rows()));
  for (int k = 0; k < dl; ++k) step(mix_input_open(inputs.row(k).transpose()));
}

void HigherOrderReservoir::reset() {
  for (auto& r : reservoirs_) r.reset();
  z_.setZero();
}

Checkpoint HigherOrderReservoir::checkpoint() const {
  Checkpoint cp;
  cp.z = z_;
  for (const auto& r : reservoirs_) cp.states.push_back(r.eigenbasis_state());
  return cp;
}

void HigherOrderReservoir::restore(const Checkpoint& cp) {
  if (cp.z.size() != z_.size() || cp.states.size() != reservoirs_.size()) {
    throw DomainError("checkpoint does not match reservoir layout");
  }
  for (std::size_t l = 0; l < reservoirs_.size(); ++l) reservoirs_[l].set_eigenbasis_state(cp.states[l]);
  z_ = cp.z;
}

namespace {
constexpr std::string_view kCheckpointMagic = "HQCK";
}

std::vector<std::uint8_t> Checkpoint::to_bytes() const {
  io::ByteWriter w;
  w.put_bytes(kCheckpointMagic);
  w.put_u32(1);
  const Index d = states.empty() ? 0 : states.front().rows();
  w.put_u64(states.size());
  w.put_u64(static_cast<std::uint64_t>(d));
  w.put_u64(static_cast<std::uint64_t>(z.size()));
  w.put_f64s({z.data(), static_cast<std::size_t>(z.size())});
  for (const auto& s : states) {
    for (Index r = 0; r < d; ++r) {
      for (Index c = 0; c < d; ++c) {
        w.put_f64(s(r, c).real());
        w.put_f64(s(r, c).imag());
      }
    }
  }
  return w.take();
}

Checkpoint Checkpoint::from_bytes(std::span<const std::uint8_t> bytes) {
  io::ByteReader rd(bytes);
  if (rd.bytes(4, "magic") != kCheckpointMagic) throw ParseError("not a reservoir checkpoint", 0);
  if (rd.u32("version") != 1) throw ParseError("unsupported checkpoint version", 4);
  const auto n_res = rd.u64("n_reservoirs");
  const auto d = rd.u64("dim");
  const auto n_total = rd.u64("n_total");
  if (n_res > 4096 || d > 4096 || n_total > (1u << 24) ||
      rd.remaining() != 8 * (n_total + n_res * d * d * 2)) {
    throw ParseError("checkpoint payload size does not match header", rd.offset());
  }
  Checkpoint cp;
  cp.z.resize(static_cast<Index>(n_total));
  rd.f64s({cp.z.data(), static_cast<std::size_t>(n_total)}, "z");
  for (std::uint64_t l = 0; l < n_res; ++l) {
    Eigen::MatrixXcd s(static_cast<Index>(d), static_cast<Index>(d));
    for (Index r = 0; r < s.rows(); ++r) {
      for (Index c = 0; c < s.cols(); ++c) {
        const double re = rd.f64("state");
        const double im = rd.f64("state");
        s(r, c) = {re, im};
      }
    }
    cp.states.push_back(std::move(s));
  }
  return cp;
}

}  // namespace hqrc::reservoir
