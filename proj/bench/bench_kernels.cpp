// Serial reference kernels against their OpenMP counterparts, plus the
// literal density-matrix step against the eigenbasis reservoir step.

#include <benchmark/benchmark.h>

#include "hqrc/kernels.hpp"
#include "hqrc/quantum.hpp"
#include "hqrc/reservoir.hpp"

using namespace hqrc;
using kernels::Exec;

namespace {

Exec exec_of(const benchmark::State& state) { return state.range(0) == 0 ? Exec::kSerial : Exec::kParallel; }

void label(benchmark::State& state) { state.SetLabel(state.range(0) == 0 ? "serial" : "omp"); }

void BM_Gram(benchmark::State& state) {
  const Eigen::MatrixXd s = Eigen::MatrixXd::Random(state.range(1), 400);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::gram(s, exec_of(state)));
  label(state);
}
BENCHMARK(BM_Gram)->ArgsProduct({{0, 1}, {2000, 20000}})->Unit(benchmark::kMillisecond);

void BM_Project(benchmark::State& state) {
  const Eigen::MatrixXd modes = Eigen::MatrixXd::Random(state.range(1), 5);
  const Eigen::VectorXd mean = Eigen::VectorXd::Random(state.range(1));
  const Eigen::MatrixXd data = Eigen::MatrixXd::Random(state.range(1), 400);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::project(modes, mean, data, exec_of(state)));
  label(state);
}
BENCHMARK(BM_Project)->ArgsProduct({{0, 1}, {2000, 20000}})->Unit(benchmark::kMillisecond);

void BM_Reconstruct(benchmark::State& state) {
  const Eigen::MatrixXd modes = Eigen::MatrixXd::Random(state.range(1), 5);
  const Eigen::VectorXd mean = Eigen::VectorXd::Random(state.range(1));
  const Eigen::MatrixXd coeffs = Eigen::MatrixXd::Random(5, 300);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::reconstruct(modes, mean, coeffs, exec_of(state)));
  label(state);
}
BENCHMARK(BM_Reconstruct)->ArgsProduct({{0, 1}, {2000, 20000}})->Unit(benchmark::kMillisecond);

void BM_SumSquaredDiff(benchmark::State& state) {
  const Eigen::MatrixXd a = Eigen::MatrixXd::Random(state.range(1), 300);
  const Eigen::MatrixXd b = Eigen::MatrixXd::Random(state.range(1), 300);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::sum_squared_diff(a, b, {}, exec_of(state)));
  label(state);
}
BENCHMARK(BM_SumSquaredDiff)->ArgsProduct({{0, 1}, {2000, 20000}})->Unit(benchmark::kMillisecond);

void BM_Conjugate(benchmark::State& state) {
  const Eigen::Index d = Eigen::Index{1} << state.range(1);
  const Eigen::MatrixXcd u = Eigen::MatrixXcd::Random(d, d);
  const Eigen::MatrixXcd rho = Eigen::MatrixXcd::Random(d, d);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::conjugate(u, rho, exec_of(state)));
  label(state);
}
BENCHMARK(BM_Conjugate)->ArgsProduct({{0, 1}, {4, 6, 8}})->Unit(benchmark::kMicrosecond);

// One reservoir input step (injection plus V substeps) done literally.
void BM_LiteralStep(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto dyn = reservoir::ReservoirDynamics::create(quantum::IsingParams::random(n, 2.0, 0), 4.0, 10);
  auto rho = quantum::DensityMatrix::maximally_mixed(n);
  for (auto _ : state) {
    rho = quantum::inject_input(rho, 0.3);
    for (int v = 0; v < dyn->v_nodes; ++v) {
      rho = quantum::evolve(rho, dyn->propagator);
      benchmark::DoNotOptimize(quantum::measure(rho, dyn->observables));
    }
  }
}
BENCHMARK(BM_LiteralStep)->DenseRange(3, 7)->Unit(benchmark::kMicrosecond);

void BM_EigenbasisStep(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  reservoir::QuantumReservoir r(
      reservoir::ReservoirDynamics::create(quantum::IsingParams::random(n, 2.0, 0), 4.0, 10));
  for (auto _ : state) benchmark::DoNotOptimize(r.substep_evolve(0.3));
}
BENCHMARK(BM_EigenbasisStep)->DenseRange(3, 7)->Unit(benchmark::kMicrosecond);

// Whole higher-order reservoir step, reservoirs in sequence or in parallel.
void BM_HigherOrderStep(benchmark::State& state) {
  reservoir::HqrConfig cfg;
  cfg.n_in = 5;
  reservoir::HigherOrderReservoir h(cfg, exec_of(state));
  const Eigen::VectorXd u = Eigen::VectorXd::Constant(5, 0.4);
  for (auto _ : state) benchmark::DoNotOptimize(h.step(h.mix_input_open(u)));
  label(state);
}
BENCHMARK(BM_HigherOrderStep)->Args({0})->Args({1})->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
