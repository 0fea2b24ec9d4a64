#include "hqrc/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "hqrc/binary_io.hpp"
#include "hqrc/errors.hpp"
#include "hqrc/rng.hpp"
#include "json.hpp"

namespace hqrc::experiment {

using Eigen::Index;
using json = nlohmann::json;

std::string to_string(ModelKind kind) { return kind == ModelKind::kEsn ? "esn" : "hqrc"; }

ModelKind parse_model_kind(std::string_view name) {
  if (name == "hqrc") return ModelKind::kHqrc;
  if (name == "esn") return ModelKind::kEsn;
  throw DomainError("unknown model kind '" + std::string(name) + "'");
}

// ---- configuration ---------------------------------------------------------

reservoir::HqrConfig ExperimentConfig::resolved_hqrc() const {
  auto c = hqrc;
  c.n_in = pod_modes;
  c.seed = seed;
  return c;
}

esn::EsnConfig ExperimentConfig::resolved_esn() const {
  auto c = esn;
  c.seed = seed;
  return c;
}

std::string ExperimentConfig::label() const {
  char buf[160];
  if (model == ModelKind::kEsn) {
    std::snprintf(buf, sizeof buf, "esn-u%d-d%d-r%g-beta%g", esn.units, esn.degree, esn.radius, esn.beta);
  } else {
    std::snprintf(buf, sizeof buf, "hqrc-n%d-q%d-J%g-tau%g-V%d-alpha%g-beta%g", hqrc.n_qubits, hqrc.n_reservoirs,
                  hqrc.coupling_j, hqrc.tau, hqrc.virtual_nodes, hqrc.alpha, hqrc_beta);
  }
  return buf;
}

void ExperimentConfig::validate() const {
  if (washout < 0) throw DomainError("washout must be non-negative");
  if (horizon < 1) throw DomainError("horizon must be at least 1");
  if (pod_modes < 1) throw DomainError("pod_modes must be at least 1");
  if (top_k < 1) throw DomainError("top_k must be at least 1");
  if (eval_starts.empty()) throw DomainError("eval_starts must not be empty");
  for (int s : eval_starts)
    if (s < 0) throw DomainError("eval_starts must be non-negative");
  if (!(hqrc_beta >= 0.0)) throw DomainError("hqrc beta must be non-negative");
  if (model == ModelKind::kHqrc) {
    if (hqrc.n_reservoirs < 1 || hqrc.n_reservoirs % pod_modes != 0) {
      throw DomainError("n_reservoirs must be a positive multiple of pod_modes");
    }
    if (hqrc.virtual_nodes < 1) throw DomainError("virtual_nodes must be at least 1");
    if (!(hqrc.tau > 0.0)) throw DomainError("tau must be positive");
  } else {
    esn.validate();
  }
  region.validate();
}

namespace {

/// Rejects keys outside `allowed`.
void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) throw DomainError("config '" + where + "' must be an object");
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw DomainError("unknown config key '" + where + key + "'");
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw DomainError("config key '" + where + key + "' has the wrong type");
  }
}

}  // namespace

std::string ExperimentConfig::to_json() const {
  json j;
  j["model"] = experiment::to_string(model);
  j["hqrc"] = {{"n_qubits", hqrc.n_qubits},         {"n_reservoirs", hqrc.n_reservoirs},
               {"coupling_j", hqrc.coupling_j},     {"tau", hqrc.tau},
               {"virtual_nodes", hqrc.virtual_nodes}, {"alpha", hqrc.alpha},
               {"shared_hamiltonian", hqrc.shared_hamiltonian}, {"beta", hqrc_beta}};
  j["esn"] = {{"units", esn.units},
              {"degree", esn.degree},
              {"radius", esn.radius},
              {"input_scale", esn.input_scale},
              {"beta", esn.beta}};
  j["washout"] = washout;
  j["horizon"] = horizon;
  j["eval_starts"] = eval_starts;
  j["pod_modes"] = pod_modes;
  j["top_k"] = top_k;
  j["seed"] = seed;
  j["data"] = data;
  j["out_dir"] = out_dir;
  j["train_end"] = train_end ? json(*train_end) : json(nullptr);
  j["last_train_date"] = last_train_date;
  j["region"] = {{"lat_min", region.lat_min},
                 {"lat_max", region.lat_max},
                 {"lon_min", region.lon_min},
                 {"lon_max", region.lon_max}};
  j["mask_sentinel"] = mask_sentinel;
  j["grid"] = {{"virtual_nodes", grid.virtual_nodes},
               {"alpha", grid.alpha},
               {"beta", grid.beta},
               {"esn_units", grid.esn_units},
               {"esn_beta", grid.esn_beta}};
  j["ablate"] = {{"washout_values", washout_values},
                 {"structure_axis", structure_axis},
                 {"structure_values", structure_values},
                 {"mode_values", mode_values}};
  j["perturb"] = {{"epsilon", perturb_epsilon}, {"draws", perturb_draws}, {"start", perturb_start}};
  return j.dump(2);
}

ExperimentConfig ExperimentConfig::from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config is not valid JSON: ") + e.what(), e.byte);
  }
  check_keys(j,
             {"model", "hqrc", "esn", "washout", "horizon", "eval_starts", "pod_modes", "top_k", "seed", "data",
              "out_dir", "train_end", "last_train_date", "region", "mask_sentinel", "grid", "ablate", "perturb"},
             "");
  ExperimentConfig c;
  std::string model = to_string(c.model);
  read(j, "model", model, "");
  c.model = parse_model_kind(model);
  if (j.contains("hqrc")) {
    const auto& h = j["hqrc"];
    check_keys(h, {"n_qubits", "n_reservoirs", "coupling_j", "tau", "virtual_nodes", "alpha", "shared_hamiltonian",
                   "beta"},
               "hqrc.");
    read(h, "n_qubits", c.hqrc.n_qubits, "hqrc.");
    read(h, "n_reservoirs", c.hqrc.n_reservoirs, "hqrc.");
    read(h, "coupling_j", c.hqrc.coupling_j, "hqrc.");
    read(h, "tau", c.hqrc.tau, "hqrc.");
    read(h, "virtual_nodes", c.hqrc.virtual_nodes, "hqrc.");
    read(h, "alpha", c.hqrc.alpha, "hqrc.");
    read(h, "shared_hamiltonian", c.hqrc.shared_hamiltonian, "hqrc.");
    read(h, "beta", c.hqrc_beta, "hqrc.");
  }
  if (j.contains("esn")) {
    const auto& e = j["esn"];
    check_keys(e, {"units", "degree", "radius", "input_scale", "beta"}, "esn.");
    read(e, "units", c.esn.units, "esn.");
    read(e, "degree", c.esn.degree, "esn.");
    read(e, "radius", c.esn.radius, "esn.");
    read(e, "input_scale", c.esn.input_scale, "esn.");
    read(e, "beta", c.esn.beta, "esn.");
  }
  read(j, "washout", c.washout, "");
  read(j, "horizon", c.horizon, "");
  read(j, "eval_starts", c.eval_starts, "");
  read(j, "pod_modes", c.pod_modes, "");
  read(j, "top_k", c.top_k, "");
  read(j, "seed", c.seed, "");
  read(j, "data", c.data, "");
  read(j, "out_dir", c.out_dir, "");
  if (j.contains("train_end") && !j["train_end"].is_null()) {
    Index te = 0;
    read(j, "train_end", te, "");
    c.train_end = te;
  }
  read(j, "last_train_date", c.last_train_date, "");
  if (j.contains("region")) {
    const auto& r = j["region"];
    check_keys(r, {"lat_min", "lat_max", "lon_min", "lon_max"}, "region.");
    read(r, "lat_min", c.region.lat_min, "region.");
    read(r, "lat_max", c.region.lat_max, "region.");
    read(r, "lon_min", c.region.lon_min, "region.");
    read(r, "lon_max", c.region.lon_max, "region.");
  }
  read(j, "mask_sentinel", c.mask_sentinel, "");
  if (j.contains("grid")) {
    const auto& g = j["grid"];
    check_keys(g, {"virtual_nodes", "alpha", "beta", "esn_units", "esn_beta"}, "grid.");
    read(g, "virtual_nodes", c.grid.virtual_nodes, "grid.");
    read(g, "alpha", c.grid.alpha, "grid.");
    read(g, "beta", c.grid.beta, "grid.");
    read(g, "esn_units", c.grid.esn_units, "grid.");
    read(g, "esn_beta", c.grid.esn_beta, "grid.");
  }
  if (j.contains("ablate")) {
    const auto& a = j["ablate"];
    check_keys(a, {"washout_values", "structure_axis", "structure_values", "mode_values"}, "ablate.");
    read(a, "washout_values", c.washout_values, "ablate.");
    read(a, "structure_axis", c.structure_axis, "ablate.");
    read(a, "structure_values", c.structure_values, "ablate.");
    read(a, "mode_values", c.mode_values, "ablate.");
  }
  if (j.contains("perturb")) {
    const auto& p = j["perturb"];
    check_keys(p, {"epsilon", "draws", "start"}, "perturb.");
    read(p, "epsilon", c.perturb_epsilon, "perturb.");
    read(p, "draws", c.perturb_draws, "perturb.");
    read(p, "start", c.perturb_start, "perturb.");
  }
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  return from_json(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

// ---- data preparation ------------------------------------------------------

data::SplitSpec resolve_split(const ExperimentConfig& cfg, const data::GriddedSeries& series) {
  if (cfg.train_end) return data::split_at(series.n_time, *cfg.train_end);
  if (series.dates.empty()) throw DomainError("series has no dates; set train_end to split by index");
  return data::split_by_date(series, cfg.last_train_date);
}

namespace {

PreparedData prepare_common(const ExperimentConfig& cfg, data::GsfDataset dataset) {
  PreparedData p;
  p.split = resolve_split(cfg, dataset.series);
  p.flat = data::flatten(dataset.series, dataset.mask);
  try {
    p.region = data::region_indices(dataset.mask, dataset.series.grid, cfg.region);
  } catch (const DomainError&) {
    p.region.clear();
  }
  p.dataset = std::move(dataset);
  return p;
}

void finish(const ExperimentConfig& cfg, PreparedData& p) {
  p.coeffs = pod::project_all(p.pod.basis, p.flat, cfg.exec);
  p.pod.scaler = pod::MinMaxScaler::fit(p.coeffs.middleRows(p.split.train_begin, p.split.n_train()));
  p.scaled = p.pod.scaler.scale(p.coeffs);
}

}  // namespace

PreparedData prepare(const ExperimentConfig& cfg, data::GsfDataset dataset) {
  PreparedData p = prepare_common(cfg, std::move(dataset));
  const auto fit = pod::fit_pod(p.flat.middleCols(p.split.train_begin, p.split.n_train()), cfg.pod_modes, cfg.exec);
  p.pod.basis = fit.basis;
  finish(cfg, p);
  return p;
}

PreparedData prepare(const ExperimentConfig& cfg, data::GsfDataset dataset, pod::PodModel pod) {
  PreparedData p = prepare_common(cfg, std::move(dataset));
  if (pod.basis.n_points() != p.flat.rows()) throw DomainError("POD basis does not match the dataset's kept cells");
  if (pod.basis.n_modes() != cfg.pod_modes) throw DomainError("POD basis mode count differs from pod_modes");
  p.pod = std::move(pod);
  if (p.pod.scaler.fitted()) {
    p.coeffs = pod::project_all(p.pod.basis, p.flat, cfg.exec);
    p.scaled = p.pod.scaler.scale(p.coeffs);
  } else {
    finish(cfg, p);
  }
  return p;
}

// ---- training and forecasting ----------------------------------------------

std::unique_ptr<forecast::Forecaster> make_forecaster(const ExperimentConfig& cfg) {
  if (cfg.model == ModelKind::kEsn) return std::make_unique<forecast::EsnForecaster>(cfg.resolved_esn(), cfg.pod_modes);
  return std::make_unique<forecast::HqrcForecaster>(cfg.resolved_hqrc(), cfg.exec);
}

TrainedModel run_train(const ExperimentConfig& cfg, const PreparedData& prep) {
  cfg.validate();
  if (prep.scaled.cols() != cfg.pod_modes) throw DomainError("prepared data has a different mode count");
  TrainedModel out;
  out.config = cfg;
  const auto t0 = std::chrono::steady_clock::now();
  out.model = make_forecaster(cfg);
  out.weights = forecast::train(*out.model, prep.train_inputs(), cfg.washout, cfg.beta());
  out.train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

void save_model(const std::filesystem::path& dir, const TrainedModel& model, const pod::PodModel& pod) {
  std::filesystem::create_directories(dir);
  io::write_text_atomic(dir / "config.json", model.config.to_json());
  pod.save(dir / "pod.bin");
  model.weights.save(dir / "readout.bin");
}

LoadedModel load_model(const std::filesystem::path& dir) {
  LoadedModel out;
  out.config = ExperimentConfig::load(dir / "config.json");
  out.pod = pod::PodModel::load(dir / "pod.bin");
  if (out.pod.basis.n_modes() != out.config.pod_modes) throw DomainError("pod.bin disagrees with config pod_modes");
  out.model = make_forecaster(out.config);
  out.model->set_readout(readout::ReadoutWeights::load(dir / "readout.bin"));
  return out;
}

Eigen::MatrixXd ForecastResult::grids(const pod::PodBasis& basis) const {
  return pod::reconstruct_all(basis, coeffs);
}

ForecastResult evaluate(const PreparedData& prep, const Eigen::MatrixXd& coeffs, Index start,
                        std::optional<Index> truth_end) {
  const Index t_end = truth_end.value_or(prep.coeffs.rows());
  if (t_end > prep.coeffs.rows()) throw DomainError("truth_end beyond the series");
  if (coeffs.cols() != prep.coeffs.cols()) throw DomainError("forecast has the wrong number of modes");
  ForecastResult r;
  r.start = start;
  r.horizon = static_cast<int>(coeffs.rows());
  r.coeffs = coeffs;
  r.scaled = prep.pod.scaler.scale(coeffs);
  r.overlap = std::min<Index>(coeffs.rows(), t_end - start);
  r.truncated = r.overlap < coeffs.rows();
  if (r.overlap <= 0) throw DomainError("no truth is available after start index " + std::to_string(start));

  const auto& basis = prep.pod.basis;
  const Eigen::MatrixXd truth_c = prep.coeffs.middleRows(start, r.overlap);
  const Eigen::MatrixXd truth_g = prep.flat.middleCols(start, r.overlap);
  const double floor = metrics::reconstruction_floor(basis, truth_g);

  auto report = [&](const Eigen::MatrixXd& c) {
    metrics::MetricReport m;
    const Eigen::MatrixXd g = pod::reconstruct_all(basis, c.topRows(r.overlap));
    m.rmse_grid = metrics::rmse(g, truth_g);
    m.rmse_region = prep.region.empty() ? std::numeric_limits<double>::quiet_NaN()
                                        : metrics::rmse(g, truth_g, prep.region);
    m.rmnse_modal = metrics::rmnse(c.topRows(r.overlap), truth_c);
    m.recon_floor = floor;
    m.horizon = static_cast<int>(r.overlap);
    return m;
  };
  r.report = report(coeffs);
  r.persistence_coeffs = forecast::persistence(prep.coeffs, start, r.horizon);
  r.persistence = report(r.persistence_coeffs);
  return r;
}

ForecastResult run_forecast(const ExperimentConfig& cfg, const PreparedData& prep, forecast::Forecaster& model,
                            Index start, int horizon, std::optional<Index> truth_end) {
  const Eigen::MatrixXd scaled = forecast::rollout(model, prep.scaled, start, cfg.washout, horizon);
  ForecastResult r = evaluate(prep, prep.pod.scaler.unscale(scaled), start, truth_end);
  r.scaled = scaled;
  return r;
}

double validation_rmnse(const ExperimentConfig& cfg, const PreparedData& prep, forecast::Forecaster& model) {
  double acc = 0.0;
  for (int s : cfg.eval_starts) acc += run_forecast(cfg, prep, model, prep.test_start(s), cfg.horizon).report.rmnse_modal;
  return acc / static_cast<double>(cfg.eval_starts.size());
}

// ---- sweeps ----------------------------------------------------------------

namespace {

/// Runs fn(i) for i in [0, n) across OpenMP threads; per-item exceptions are
/// returned rather than thrown.
template <typename F>
std::vector<std::exception_ptr> parallel_each(std::size_t n, F&& fn) {
  std::vector<std::exception_ptr> errors(n);
  const long count = static_cast<long>(n);
#pragma omp parallel for schedule(dynamic, 1) if (count > 1)
  for (long i = 0; i < count; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  return errors;
}

void rethrow_first(const std::vector<std::exception_ptr>& errors) {
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// Inner kernels stay serial while the outer loop owns the threads.
ExperimentConfig inner(ExperimentConfig c, std::size_t outer) {
  if (outer > 1 && kernels::max_threads() > 1) c.exec = kernels::Exec::kSerial;
  return c;
}

double mean_over_starts(const ExperimentConfig& cfg, const PreparedData& prep, forecast::Forecaster& model,
                        double metrics::MetricReport::*field) {
  double acc = 0.0;
  for (int s : cfg.eval_starts) acc += run_forecast(cfg, prep, model, prep.test_start(s), cfg.horizon).report.*field;
  return acc / static_cast<double>(cfg.eval_starts.size());
}

}  // namespace

bool SweepResult::all_ok() const {
  for (const auto& e : ranked)
    if (!e.ok()) return false;
  return true;
}

std::vector<ExperimentConfig> expand_grid(const ExperimentConfig& base) {
  std::vector<ExperimentConfig> out;
  if (base.model == ModelKind::kEsn) {
    for (int u : base.grid.esn_units)
      for (double b : base.grid.esn_beta) {
        auto c = base;
        c.esn.units = u;
        c.esn.degree = std::min(c.esn.degree, u);
        c.esn.beta = b;
        out.push_back(c);
      }
  } else {
    for (int v : base.grid.virtual_nodes)
      for (double a : base.grid.alpha)
        for (double b : base.grid.beta) {
          auto c = base;
          c.hqrc.virtual_nodes = v;
          c.hqrc.alpha = a;
          c.hqrc_beta = b;
          out.push_back(c);
        }
  }
  return out;
}

SweepResult sweep(const std::vector<ExperimentConfig>& configs, const Scorer& scorer, int top_k) {
  if (configs.empty()) throw DomainError("sweep grid is empty");
  if (top_k < 1) throw DomainError("top_k must be at least 1");
  SweepResult res;
  res.ranked.resize(configs.size());
  const auto errors = parallel_each(configs.size(), [&](std::size_t i) {
    auto& e = res.ranked[i];
    e.config = configs[i];
    e.label = configs[i].label();
    e.score = std::numeric_limits<double>::infinity();
    double secs = 0.0;
    const double s = scorer(inner(configs[i], configs.size()), secs);
    e.train_seconds = secs;
    if (!std::isfinite(s)) throw NumericError("validation score is not finite");
    e.score = s;
  });
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i]) continue;
    res.ranked[i].score = std::numeric_limits<double>::infinity();
    try {
      std::rethrow_exception(errors[i]);
    } catch (const std::exception& ex) {
      res.ranked[i].error = ex.what();
    } catch (...) {
      res.ranked[i].error = "unknown error";
    }
  }
  std::stable_sort(res.ranked.begin(), res.ranked.end(), [](const SweepEntry& a, const SweepEntry& b) {
    if (a.score != b.score) return a.score < b.score;
    return a.label < b.label;
  });
  res.top_k = std::min<std::size_t>(static_cast<std::size_t>(top_k), res.ranked.size());
  return res;
}

SweepResult sweep(const std::vector<ExperimentConfig>& configs, const PreparedData& prep, int top_k) {
  return sweep(
      configs,
      [&](const ExperimentConfig& c, double& secs) {
        auto t = run_train(c, prep);
        secs = t.train_seconds;
        return validation_rmnse(c, prep, *t.model);
      },
      top_k);
}

EnsembleForecast ensemble_forecast(const std::vector<ExperimentConfig>& configs, const PreparedData& prep, Index start,
                                   int horizon) {
  if (configs.empty()) throw DomainError("ensemble of zero models");
  EnsembleForecast out;
  out.members.resize(configs.size());
  std::vector<metrics::MetricReport> reports(configs.size());
  rethrow_first(parallel_each(configs.size(), [&](std::size_t i) {
    const auto c = inner(configs[i], configs.size());
    auto t = run_train(c, prep);
    const auto r = run_forecast(c, prep, *t.model, start, horizon);
    out.members[i] = r.coeffs;
    reports[i] = r.report;
  }));
  out.stats = metrics::ensemble_average(out.members);
  out.of_mean = evaluate(prep, out.stats.mean, start);
  const double n = static_cast<double>(reports.size());
  auto& m = out.mean_of_errors;
  for (const auto& r : reports) {
    m.rmse_grid += r.rmse_grid / n;
    m.rmse_region += r.rmse_region / n;
    m.rmnse_modal += r.rmnse_modal / n;
  }
  m.recon_floor = out.of_mean.report.recon_floor;
  m.horizon = out.of_mean.report.horizon;
  return out;
}

// ---- ablations -------------------------------------------------------------

std::vector<WashoutRow> ablate_washout(const ExperimentConfig& cfg, const PreparedData& prep,
                                       const std::vector<int>& values) {
  std::vector<WashoutRow> rows(values.size());
  rethrow_first(parallel_each(values.size(), [&](std::size_t i) {
    auto c = inner(cfg, values.size());
    c.washout = values[i];
    auto t = run_train(c, prep);
    WashoutRow& row = rows[i];
    row.washout = values[i];
    for (int s : c.eval_starts) {
      row.rmse_train +=
          run_forecast(c, prep, *t.model, prep.train_start(s), c.horizon, prep.split.train_end).report.rmse_grid;
      const auto test = run_forecast(c, prep, *t.model, prep.test_start(s), c.horizon).report;
      row.rmse_test += test.rmse_grid;
      row.rmnse_test += test.rmnse_modal;
    }
    const double n = static_cast<double>(c.eval_starts.size());
    row.rmse_train /= n;
    row.rmse_test /= n;
    row.rmnse_test /= n;
  }));
  return rows;
}

ExperimentConfig with_structure(const ExperimentConfig& cfg, const std::string& axis, double value) {
  auto c = cfg;
  auto as_int = [&](const char* what) {
    if (value != std::floor(value) || value < 1) throw DomainError(std::string(what) + " must be a positive integer");
    return static_cast<int>(value);
  };
  if (axis == "n_qubits") {
    c.hqrc.n_qubits = as_int("n_qubits");
  } else if (axis == "n_reservoirs") {
    c.hqrc.n_reservoirs = as_int("n_reservoirs");
  } else if (axis == "coupling_j") {
    c.hqrc.coupling_j = value;
  } else if (axis == "tau") {
    c.hqrc.tau = value;
  } else {
    throw DomainError("unknown structure axis '" + axis + "' (use n_qubits, n_reservoirs, coupling_j or tau)");
  }
  return c;
}

std::vector<StructureRow> ablate_structure(const ExperimentConfig& cfg, const PreparedData& prep,
                                           const std::string& axis, const std::vector<double>& values) {
  if (cfg.model != ModelKind::kHqrc) throw DomainError("structure ablation applies to the hqrc model");
  std::vector<StructureRow> rows(values.size());
  rethrow_first(parallel_each(values.size(), [&](std::size_t i) {
    const auto c = inner(with_structure(cfg, axis, values[i]), values.size());
    auto t = run_train(c, prep);
    rows[i] = {axis, values[i], mean_over_starts(c, prep, *t.model, &metrics::MetricReport::rmnse_modal),
               mean_over_starts(c, prep, *t.model, &metrics::MetricReport::rmse_grid)};
  }));
  return rows;
}

std::vector<ModesRow> ablate_modes(const ExperimentConfig& cfg, const data::GsfDataset& dataset,
                                   const std::vector<int>& values) {
  std::vector<ModesRow> rows(values.size());
  rethrow_first(parallel_each(values.size(), [&](std::size_t i) {
    auto c = inner(cfg, values.size());
    c.pod_modes = values[i];
    if (c.model == ModelKind::kHqrc && c.hqrc.n_reservoirs % c.pod_modes != 0) {
      c.hqrc.n_reservoirs = (c.hqrc.n_reservoirs + c.pod_modes - 1) / c.pod_modes * c.pod_modes;
    }
    const auto prep = prepare(c, dataset);
    auto t = run_train(c, prep);
    ModesRow& row = rows[i];
    row.modes = c.pod_modes;
    row.n_reservoirs = c.hqrc.n_reservoirs;
    row.rmnse = mean_over_starts(c, prep, *t.model, &metrics::MetricReport::rmnse_modal);
    row.rmse_test = mean_over_starts(c, prep, *t.model, &metrics::MetricReport::rmse_grid);
    row.recon_floor_test = metrics::reconstruction_floor(
        prep.pod.basis, prep.flat.middleCols(prep.split.test_begin, prep.split.n_test()), {}, c.exec);
  }));
  return rows;
}

PerturbationResult perturbation_study(const ExperimentConfig& cfg, const PreparedData& prep,
                                      forecast::Forecaster& model, Index start, double epsilon, int n_draws,
                                      std::uint64_t seed) {
  if (!(epsilon >= 0.0)) throw DomainError("perturbation size must be non-negative");
  if (n_draws < 1) throw DomainError("perturbation study needs at least one draw");
  PerturbationResult out;
  out.unperturbed = forecast::rollout(model, prep.scaled, start, cfg.washout, cfg.horizon);
  Pcg32 rng(seed, streams::kPerturbation);
  for (int d = 0; d < n_draws; ++d) {
    Eigen::VectorXd offset(model.n_in());
    for (Index m = 0; m < offset.size(); ++m) offset(m) = rng.uniform(-epsilon, epsilon);
    out.members.push_back(forecast::rollout(model, prep.scaled, start, cfg.washout, cfg.horizon, offset));
  }
  out.stats = metrics::ensemble_average(out.members);
  out.mean_abs_deviation = Eigen::VectorXd::Zero(cfg.horizon);
  for (const auto& m : out.members)
    out.mean_abs_deviation += (m - out.unperturbed).cwiseAbs().rowwise().mean();
  out.mean_abs_deviation /= static_cast<double>(n_draws);
  return out;
}

// ---- CSV -------------------------------------------------------------------

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header, const Eigen::MatrixXd& m) {
  if (!header.empty() && static_cast<Index>(header.size()) != m.cols()) throw DomainError("CSV header width mismatch");
  std::ostringstream os;
  os.precision(17);
  for (std::size_t c = 0; c < header.size(); ++c) os << (c ? "," : "") << header[c];
  if (!header.empty()) os << '\n';
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) os << (c ? "," : "") << m(r, c);
    os << '\n';
  }
  io::write_text_atomic(path, os.str());
}

Eigen::MatrixXd read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open CSV '" + path.string() + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str()) {
        numeric = false;
        break;
      }
      vals.push_back(v);
    }
    if (!numeric) {
      if (rows.empty()) continue;  // header
      throw DomainError("non-numeric cell in " + path.string() + " line " + std::to_string(line_no));
    }
    if (!rows.empty() && vals.size() != rows.front().size()) {
      throw DomainError("ragged CSV " + path.string() + " at line " + std::to_string(line_no));
    }
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) return {};
  Eigen::MatrixXd m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
  return m;
}

}  // namespace hqrc::experiment
