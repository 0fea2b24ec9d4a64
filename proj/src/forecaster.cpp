#include "hqrc/forecaster.hpp"

#include "hqrc/binary_io.hpp"
#include "hqrc/errors.hpp"

namespace hqrc::forecast {

using Eigen::Index;

Eigen::VectorXd Forecaster::predict() const {
  if (!weights().trained()) throw StateError("readout is not trained");
  return readout::predict(weights(), features());
}

HqrcForecaster::HqrcForecaster(const reservoir::HqrConfig& config, kernels::Exec exec) : hqr_(config, exec) {}

void HqrcForecaster::observe(const Eigen::VectorXd& u) { hqr_.step(hqr_.mix_input_open(u)); }

void HqrcForecaster::set_readout(const readout::ReadoutWeights& weights) {
  if (weights.n_features() != hqr_.n_total() || weights.n_outputs() != hqr_.n_in()) {
    throw DomainError("readout shape does not match the reservoir");
  }
  weights_ = readout::replicate_weights(weights, hqr_.tiling());
}

void HqrcForecaster::advance_closed() {
  if (!weights_.trained()) throw StateError("readout is not trained");
  hqr_.step(hqr_.mix_input_closed(weights_));
}

std::vector<std::uint8_t> HqrcForecaster::save_state() const { return hqr_.checkpoint().to_bytes(); }

void HqrcForecaster::load_state(std::span<const std::uint8_t> bytes) {
  hqr_.restore(reservoir::Checkpoint::from_bytes(bytes));
}

EsnForecaster::EsnForecaster(const esn::EsnConfig& config, int n_in) : esn_(config, n_in) {}

void EsnForecaster::set_readout(const readout::ReadoutWeights& weights) {
  if (weights.n_features() != esn_.units() || weights.n_outputs() != esn_.n_in()) {
    throw DomainError("readout shape does not match the network");
  }
  weights_ = weights;
}

void EsnForecaster::advance_closed() { esn_.step(predict()); }

std::vector<std::uint8_t> EsnForecaster::save_state() const {
  io::ByteWriter w;
  w.put_bytes("HQES");
  w.put_u64(static_cast<std::uint64_t>(esn_.units()));
  w.put_f64s(std::span<const double>(esn_.h().data(), static_cast<std::size_t>(esn_.h().size())));
  return w.take();
}

void EsnForecaster::load_state(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(bytes);
  if (r.bytes(4, "magic") != "HQES") throw ParseError("ESN state magic mismatch", 0);
  const auto n = r.u64("units");
  if (n != static_cast<std::uint64_t>(esn_.units())) throw ParseError("ESN state has the wrong unit count", 4);
  Eigen::VectorXd h(static_cast<Index>(n));
  r.f64s(std::span<double>(h.data(), n), "h");
  esn_.set_h(h);
}

readout::ReadoutWeights train(Forecaster& model, const Eigen::MatrixXd& inputs, int washout, double beta) {
  if (inputs.cols() != model.n_in()) throw DomainError("training inputs have the wrong width");
  if (washout < 0) throw DomainError("washout must be non-negative");
  if (inputs.rows() < washout + 2) {
    throw DomainError("training span of " + std::to_string(inputs.rows()) + " steps is too short for washout " +
                      std::to_string(washout));
  }
  model.reset();
  for (Index k = 0; k < washout; ++k) model.observe(inputs.row(k).transpose());
  readout::TrainingMatrix tm(model.n_features(), model.n_in(), inputs.rows() - washout - 1);
  for (Index k = washout; k + 1 < inputs.rows(); ++k) {
    model.observe(inputs.row(k).transpose());
    tm.add_row(model.features(), inputs.row(k + 1).transpose());
  }
  const auto weights = readout::ridge_fit(tm, beta);
  model.set_readout(weights);
  return weights;
}

Eigen::MatrixXd rollout(Forecaster& model, const Eigen::MatrixXd& timeline, Index start, int washout, int horizon,
                        const std::optional<Eigen::VectorXd>& first_input_offset) {
  if (timeline.cols() != model.n_in()) throw DomainError("timeline has the wrong width");
  if (horizon < 1) throw DomainError("horizon must be at least 1");
  if (washout < 0 || start - washout < 0 || start > timeline.rows()) {
    throw DomainError("start index " + std::to_string(start) + " leaves no room for washout " +
                      std::to_string(washout));
  }
  if (first_input_offset && washout == 0) throw DomainError("an input perturbation needs washout >= 1");
  model.reset();
  for (Index k = start - washout; k < start; ++k) {
    Eigen::VectorXd u = timeline.row(k).transpose();
    if (first_input_offset && k == start - washout) u += *first_input_offset;
    model.observe(u);
  }
  Eigen::MatrixXd out(horizon, model.n_in());
  for (int h = 0; h < horizon; ++h) {
    out.row(h) = model.predict().transpose();
    if (h + 1 < horizon) model.advance_closed();
  }
  return out;
}

Eigen::MatrixXd persistence(const Eigen::MatrixXd& timeline, Index start, int horizon) {
  if (start < 1 || start > timeline.rows()) throw DomainError("persistence needs a true row before start");
  return timeline.row(start - 1).replicate(horizon, 1);
}

}  // namespace hqrc::forecast
