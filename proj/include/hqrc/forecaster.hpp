#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "hqrc/esn.hpp"
#include "hqrc/readout.hpp"
#include "hqrc/reservoir.hpp"

namespace hqrc::forecast {

/// Common face of the HQRC and ESN models so both run the exact same
/// washout, fit and rollout code.
class Forecaster {
 public:
  virtual ~Forecaster() = default;

  virtual int n_in() const = 0;
  virtual Eigen::Index n_features() const = 0;
  /// Back to the initial state.
  virtual void reset() = 0;
  /// One teacher-forced step on a true (scaled) input.
  virtual void observe(const Eigen::VectorXd& u) = 0;
  /// Reservoir state the readout acts on, without the bias.
  virtual const Eigen::VectorXd& features() const = 0;
  virtual void set_readout(const readout::ReadoutWeights& weights) = 0;
  virtual const readout::ReadoutWeights& weights() const = 0;
  /// One autoregressive step driven by the model's own output.
  virtual void advance_closed() = 0;

  virtual std::vector<std::uint8_t> save_state() const = 0;
  virtual void load_state(std::span<const std::uint8_t> bytes) = 0;

  /// Clipped readout of the current state.
  Eigen::VectorXd predict() const;
};

class HqrcForecaster final : public Forecaster {
 public:
  explicit HqrcForecaster(const reservoir::HqrConfig& config, kernels::Exec exec = kernels::Exec::kParallel);

  reservoir::HigherOrderReservoir& reservoir() { return hqr_; }
  const reservoir::HigherOrderReservoir& reservoir() const { return hqr_; }

  int n_in() const override { return hqr_.n_in(); }
  Eigen::Index n_features() const override { return hqr_.n_total(); }
  void reset() override { hqr_.reset(); }
  void observe(const Eigen::VectorXd& u) override;
  const Eigen::VectorXd& features() const override { return hqr_.z(); }
  void set_readout(const readout::ReadoutWeights& weights) override;
  const readout::ReadoutWeights& weights() const override { return weights_; }
  void advance_closed() override;
  std::vector<std::uint8_t> save_state() const override;
  void load_state(std::span<const std::uint8_t> bytes) override;

 private:
  reservoir::HigherOrderReservoir hqr_;
  readout::ReadoutWeights weights_;
};

class EsnForecaster final : public Forecaster {
 public:
  EsnForecaster(const esn::EsnConfig& config, int n_in);

  esn::EchoStateNetwork& network() { return esn_; }

  int n_in() const override { return esn_.n_in(); }
  Eigen::Index n_features() const override { return esn_.units(); }
  void reset() override { esn_.reset(); }
  void observe(const Eigen::VectorXd& u) override { esn_.step(u); }
  const Eigen::VectorXd& features() const override { return esn_.h(); }
  void set_readout(const readout::ReadoutWeights& weights) override;
  const readout::ReadoutWeights& weights() const override { return weights_; }
  void advance_closed() override;
  std::vector<std::uint8_t> save_state() const override;
  void load_state(std::span<const std::uint8_t> bytes) override;

 private:
  esn::EchoStateNetwork esn_;
  readout::ReadoutWeights weights_;
};

/// Rows of `inputs` (time × N_in) are scaled inputs u_0 … u_{T−1}. Resets the
/// model, runs `washout` steps open loop, then pairs the state after u_k with
/// target u_{k+1} for every remaining k, fits the ridge readout and installs it.
readout::ReadoutWeights train(Forecaster& model, const Eigen::MatrixXd& inputs, int washout, double beta);

/// Resets the model, warms it up on the `washout` true rows preceding `start`
/// and returns `horizon` closed-loop predictions (horizon × N_in), the first
/// being the estimate of row `start`. `first_input_offset` is added to the
/// first warm-up input before it is injected.
Eigen::MatrixXd rollout(Forecaster& model, const Eigen::MatrixXd& timeline, Eigen::Index start, int washout,
                        int horizon, const std::optional<Eigen::VectorXd>& first_input_offset = std::nullopt);

/// Repeats the last true row before `start`.
Eigen::MatrixXd persistence(const Eigen::MatrixXd& timeline, Eigen::Index start, int horizon);

}  // namespace hqrc::forecast
