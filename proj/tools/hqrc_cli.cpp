#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "hqrc/binary_io.hpp"
#include "hqrc/data.hpp"
#include "hqrc/errors.hpp"
#include "hqrc/experiment.hpp"
#include "hqrc/metrics.hpp"
#include "hqrc/pod.hpp"

namespace fs = std::filesystem;
using namespace hqrc;
using experiment::ExperimentConfig;
using Eigen::Index;
using json = nlohmann::json;

namespace {

struct GlobalOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::string> data;
  std::optional<double> mask_sentinel;
  bool serial = false;
};

ExperimentConfig load_config(const GlobalOptions& g) {
  ExperimentConfig cfg = g.config.empty() ? ExperimentConfig{} : ExperimentConfig::load(g.config);
  if (g.seed) cfg.seed = *g.seed;
  if (g.out_dir) cfg.out_dir = *g.out_dir;
  if (g.data) cfg.data = *g.data;
  if (g.mask_sentinel) cfg.mask_sentinel = *g.mask_sentinel;
  if (g.serial) cfg.exec = kernels::Exec::kSerial;
  cfg.validate();
  return cfg;
}

data::GsfDataset load_data(const ExperimentConfig& cfg) {
  if (cfg.data.empty()) throw DomainError("no dataset given; pass --data or set \"data\" in the config");
  return data::load_series(cfg.data);
}

fs::path out_path(const ExperimentConfig& cfg, const std::string& name) { return fs::path(cfg.out_dir) / name; }

void write_json(const fs::path& path, const json& j) { io::write_text_atomic(path, j.dump(2) + "\n"); }

json report_json(const metrics::MetricReport& r) { return json::parse(r.to_json()); }

void say(const std::string& line) { std::cout << line << '\n'; }

/// Writes predicted grids as a GSF file; land cells carry the sentinel.
void write_grids(const fs::path& path, const experiment::PreparedData& prep, const experiment::ForecastResult& r,
                 double sentinel) {
  const Eigen::MatrixXd grids = r.grids(prep.pod.basis);
  data::GsfDataset out;
  out.mask = prep.dataset.mask;
  out.series.grid = prep.dataset.series.grid;
  out.series.cadence = prep.dataset.series.cadence;
  out.series.n_time = r.horizon;
  const auto& dates = prep.dataset.series.dates;
  if (!dates.empty() && !r.truncated) {
    out.series.dates.assign(dates.begin() + r.start, dates.begin() + r.start + r.horizon);
  }
  const std::size_t cells = out.series.grid.n_cells();
  out.series.values.resize(cells * static_cast<std::size_t>(r.horizon));
  for (int h = 0; h < r.horizon; ++h) {
    const Eigen::VectorXd full = data::unflatten(grids.col(h), out.mask, sentinel);
    for (std::size_t c = 0; c < cells; ++c) {
      out.series.values[static_cast<std::size_t>(h) * cells + c] = static_cast<float>(full(static_cast<Index>(c)));
    }
  }
  data::write_series(path, out);
}

std::vector<std::string> mode_header(const std::string& prefix, Index m) {
  std::vector<std::string> h;
  for (Index i = 0; i < m; ++i) h.push_back(prefix + std::to_string(i + 1));
  return h;
}

Eigen::MatrixXd report_matrix(const std::vector<metrics::MetricReport>& reports) {
  Eigen::MatrixXd m(static_cast<Index>(reports.size()), 5);
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    m.row(static_cast<Index>(i)) << r.rmse_grid, r.rmse_region, r.rmnse_modal, r.recon_floor,
        static_cast<double>(r.horizon);
  }
  return m;
}

// ---- subcommands -------------------------------------------------------------

int cmd_synth(const GlobalOptions& g, data::SynthSpec spec, const std::string& kind, const std::string& output) {
  spec.kind = data::parse_synth_kind(kind);
  if (g.seed) spec.seed = *g.seed;
  const fs::path path = output.empty() ? fs::path(g.out_dir.value_or("out")) / "synth.gsf" : fs::path(output);
  data::write_series(path, data::synth_series(spec));
  say("wrote " + path.string());
  return 0;
}

int cmd_pod_fit(const GlobalOptions& g) {
  const auto cfg = load_config(g);
  const auto prep = experiment::prepare(cfg, load_data(cfg));
  const fs::path path = out_path(cfg, "pod.bin");
  prep.pod.save(path);
  const auto& sp = prep.split;
  const Eigen::MatrixXd train = prep.flat.middleCols(sp.train_begin, sp.n_train());
  const Eigen::MatrixXd test = prep.flat.middleCols(sp.test_begin, sp.n_test());
  json info = {{"n_points", prep.pod.basis.n_points()},
               {"n_modes", prep.pod.basis.n_modes()},
               {"train", {sp.train_begin, sp.train_end}},
               {"test", {sp.test_begin, sp.test_end}},
               {"eigenvalues", std::vector<double>(prep.pod.basis.eigenvalues.data(),
                                                   prep.pod.basis.eigenvalues.data() +
                                                       prep.pod.basis.eigenvalues.size())},
               {"recon_floor_train", metrics::reconstruction_floor(prep.pod.basis, train, {}, cfg.exec)},
               {"recon_floor_test", sp.n_test() > 0 ? metrics::reconstruction_floor(prep.pod.basis, test, {}, cfg.exec)
                                                    : std::nan("")}};
  write_json(out_path(cfg, "pod.json"), info);
  experiment::write_csv(out_path(cfg, "coeffs.csv"), mode_header("a", prep.coeffs.cols()), prep.coeffs);
  experiment::write_csv(out_path(cfg, "coeffs_scaled.csv"), mode_header("a", prep.scaled.cols()), prep.scaled);
  say("wrote " + path.string());
  say(info.dump());
  return 0;
}

int cmd_pod_apply(const GlobalOptions& g, const std::string& pod_file) {
  const auto cfg = load_config(g);
  const auto pod = pod::PodModel::load(pod_file.empty() ? out_path(cfg, "pod.bin") : fs::path(pod_file));
  const auto prep = experiment::prepare(cfg, load_data(cfg), pod);
  experiment::write_csv(out_path(cfg, "coeffs.csv"), mode_header("a", prep.coeffs.cols()), prep.coeffs);
  experiment::write_csv(out_path(cfg, "coeffs_scaled.csv"), mode_header("a", prep.scaled.cols()), prep.scaled);
  const double floor = metrics::reconstruction_floor(prep.pod.basis, prep.flat, {}, cfg.exec);
  write_json(out_path(cfg, "pod_apply.json"), {{"n_time", prep.flat.cols()}, {"recon_floor", floor}});
  say("projected " + std::to_string(prep.flat.cols()) + " snapshots; reconstruction floor " + std::to_string(floor));
  return 0;
}

int cmd_train(const GlobalOptions& g) {
  const auto cfg = load_config(g);
  const auto prep = experiment::prepare(cfg, load_data(cfg));
  const auto t = experiment::run_train(cfg, prep);
  const fs::path dir = out_path(cfg, "model");
  experiment::save_model(dir, t, prep.pod);
  write_json(out_path(cfg, "train.json"), {{"label", cfg.label()},
                                           {"model", experiment::to_string(cfg.model)},
                                           {"n_features", t.model->n_features()},
                                           {"train_rows", prep.split.n_train()},
                                           {"train_seconds", t.train_seconds}});
  say("trained " + cfg.label() + " in " + std::to_string(t.train_seconds) + " s; model in " + dir.string());
  return 0;
}

int cmd_forecast(const GlobalOptions& g, const std::string& model_dir, std::vector<int> starts,
                 std::optional<int> horizon) {
  auto cfg = load_config(g);
  auto loaded = experiment::load_model(model_dir.empty() ? out_path(cfg, "model") : fs::path(model_dir));
  // The model's own hyperparameters win; run-level settings come from the command line.
  auto mcfg = loaded.config;
  mcfg.data = cfg.data;
  mcfg.out_dir = cfg.out_dir;
  mcfg.mask_sentinel = cfg.mask_sentinel;
  mcfg.exec = cfg.exec;
  if (!g.config.empty()) {
    mcfg.eval_starts = cfg.eval_starts;
    mcfg.horizon = cfg.horizon;
    mcfg.region = cfg.region;
  }
  if (starts.empty()) starts = mcfg.eval_starts;
  const int h = horizon.value_or(mcfg.horizon);
  const auto prep = experiment::prepare(mcfg, load_data(mcfg), loaded.pod);

  std::vector<metrics::MetricReport> reports, baselines;
  for (int s : starts) {
    const auto r = experiment::run_forecast(mcfg, prep, *loaded.model, prep.test_start(s), h);
    const std::string tag = "s" + std::to_string(s);
    experiment::write_csv(out_path(mcfg, "forecast_" + tag + ".csv"), mode_header("a", r.coeffs.cols()), r.coeffs);
    write_grids(out_path(mcfg, "forecast_" + tag + ".gsf"), prep, r, mcfg.mask_sentinel);
    write_json(out_path(mcfg, "metrics_" + tag + ".json"),
               {{"start", s},
                {"absolute_start", r.start},
                {"horizon", r.horizon},
                {"overlap", r.overlap},
                {"truncated", r.truncated},
                {"model", report_json(r.report)},
                {"persistence", report_json(r.persistence)}});
    reports.push_back(r.report);
    baselines.push_back(r.persistence);
    say(tag + ": rmse " + std::to_string(r.report.rmse_grid) + " rmnse " + std::to_string(r.report.rmnse_modal) +
        " (persistence " + std::to_string(r.persistence.rmnse_modal) + ")" + (r.truncated ? " [truncated]" : ""));
  }
  experiment::write_csv(out_path(mcfg, "metrics.csv"), metrics::MetricReport::csv_columns(), report_matrix(reports));
  experiment::write_csv(out_path(mcfg, "metrics_persistence.csv"), metrics::MetricReport::csv_columns(),
                        report_matrix(baselines));
  return 0;
}

int cmd_sweep(const GlobalOptions& g) {
  const auto cfg = load_config(g);
  const auto prep = experiment::prepare(cfg, load_data(cfg));
  const auto configs = experiment::expand_grid(cfg);
  say("sweeping " + std::to_string(configs.size()) + " configurations");
  const auto result = experiment::sweep(configs, prep, cfg.top_k);

  json ranking = json::array();
  Eigen::MatrixXd table(static_cast<Index>(result.ranked.size()), 3);
  for (std::size_t i = 0; i < result.ranked.size(); ++i) {
    const auto& e = result.ranked[i];
    ranking.push_back({{"rank", i + 1},
                       {"label", e.label},
                       {"score", std::isfinite(e.score) ? json(e.score) : json(nullptr)},
                       {"train_seconds", e.train_seconds},
                       {"error", e.error},
                       {"config", json::parse(e.config.to_json())}});
    table.row(static_cast<Index>(i)) << static_cast<double>(i + 1), e.score, e.train_seconds;
  }
  write_json(out_path(cfg, "sweep.json"), ranking);
  experiment::write_csv(out_path(cfg, "sweep.csv"), {"rank", "score", "train_seconds"}, table);

  std::vector<ExperimentConfig> top;
  for (std::size_t i = 0; i < result.top_k && result.ranked[i].ok(); ++i) top.push_back(result.ranked[i].config);
  if (!top.empty()) {
    std::vector<metrics::MetricReport> of_mean, mean_of;
    for (int s : cfg.eval_starts) {
      const auto e = experiment::ensemble_forecast(top, prep, prep.test_start(s), cfg.horizon);
      const std::string tag = "s" + std::to_string(s);
      experiment::write_csv(out_path(cfg, "ensemble_mean_" + tag + ".csv"), mode_header("a", e.stats.mean.cols()),
                            e.stats.mean);
      experiment::write_csv(out_path(cfg, "ensemble_std_" + tag + ".csv"), mode_header("a", e.stats.std.cols()),
                            e.stats.std);
      write_grids(out_path(cfg, "ensemble_" + tag + ".gsf"), prep, e.of_mean, cfg.mask_sentinel);
      of_mean.push_back(e.of_mean.report);
      mean_of.push_back(e.mean_of_errors);
    }
    experiment::write_csv(out_path(cfg, "ensemble_metrics.csv"), metrics::MetricReport::csv_columns(),
                          report_matrix(of_mean));
    experiment::write_csv(out_path(cfg, "ensemble_member_metrics.csv"), metrics::MetricReport::csv_columns(),
                          report_matrix(mean_of));
  }
  for (std::size_t i = 0; i < result.top_k; ++i) {
    say(std::to_string(i + 1) + ". " + result.ranked[i].label + " " + std::to_string(result.ranked[i].score));
  }
  if (!result.all_ok()) {
    for (const auto& e : result.ranked)
      if (!e.ok()) std::cerr << "failed: " << e.label << ": " << e.error << '\n';
    return 1;
  }
  return 0;
}

int cmd_ablate_washout(const GlobalOptions& g) {
  const auto cfg = load_config(g);
  const auto prep = experiment::prepare(cfg, load_data(cfg));
  const auto rows = experiment::ablate_washout(cfg, prep, cfg.washout_values);
  Eigen::MatrixXd m(static_cast<Index>(rows.size()), 4);
  for (std::size_t i = 0; i < rows.size(); ++i)
    m.row(static_cast<Index>(i)) << rows[i].washout, rows[i].rmse_train, rows[i].rmse_test, rows[i].rmnse_test;
  experiment::write_csv(out_path(cfg, "ablate_washout.csv"), {"washout", "rmse_train", "rmse_test", "rmnse_test"}, m);
  say("wrote " + out_path(cfg, "ablate_washout.csv").string());
  return 0;
}

int cmd_ablate_structure(const GlobalOptions& g, const std::string& axis_override) {
  const auto cfg = load_config(g);
  const std::string axis = axis_override.empty() ? cfg.structure_axis : axis_override;
  const auto prep = experiment::prepare(cfg, load_data(cfg));
  const auto rows = experiment::ablate_structure(cfg, prep, axis, cfg.structure_values);
  Eigen::MatrixXd m(static_cast<Index>(rows.size()), 3);
  for (std::size_t i = 0; i < rows.size(); ++i)
    m.row(static_cast<Index>(i)) << rows[i].value, rows[i].rmnse, rows[i].rmse_test;
  const fs::path path = out_path(cfg, "ablate_structure_" + axis + ".csv");
  experiment::write_csv(path, {axis, "rmnse", "rmse_test"}, m);
  say("wrote " + path.string());
  return 0;
}

int cmd_ablate_modes(const GlobalOptions& g) {
  const auto cfg = load_config(g);
  const auto rows = experiment::ablate_modes(cfg, load_data(cfg), cfg.mode_values);
  Eigen::MatrixXd m(static_cast<Index>(rows.size()), 5);
  for (std::size_t i = 0; i < rows.size(); ++i)
    m.row(static_cast<Index>(i)) << rows[i].modes, rows[i].n_reservoirs, rows[i].rmnse, rows[i].rmse_test,
        rows[i].recon_floor_test;
  experiment::write_csv(out_path(cfg, "ablate_modes.csv"),
                        {"modes", "n_reservoirs", "rmnse", "rmse_test", "recon_floor_test"}, m);
  say("wrote " + out_path(cfg, "ablate_modes.csv").string());
  return 0;
}

int cmd_perturb(const GlobalOptions& g, const std::string& model_dir) {
  const auto cfg = load_config(g);
  std::unique_ptr<forecast::Forecaster> model;
  std::optional<experiment::PreparedData> prep;
  ExperimentConfig mcfg = cfg;
  if (!model_dir.empty()) {
    auto loaded = experiment::load_model(model_dir);
    mcfg = loaded.config;
    mcfg.data = cfg.data;
    mcfg.out_dir = cfg.out_dir;
    mcfg.exec = cfg.exec;
    mcfg.perturb_epsilon = cfg.perturb_epsilon;
    mcfg.perturb_draws = cfg.perturb_draws;
    mcfg.perturb_start = cfg.perturb_start;
    prep.emplace(experiment::prepare(mcfg, load_data(mcfg), loaded.pod));
    model = std::move(loaded.model);
  } else {
    prep.emplace(experiment::prepare(mcfg, load_data(mcfg)));
    model = experiment::run_train(mcfg, *prep).model;
  }
  const auto r = experiment::perturbation_study(mcfg, *prep, *model, prep->test_start(mcfg.perturb_start),
                                                mcfg.perturb_epsilon, mcfg.perturb_draws, mcfg.seed);
  const Index m = r.unperturbed.cols();
  experiment::write_csv(out_path(mcfg, "perturb_unperturbed.csv"), mode_header("a", m), r.unperturbed);
  experiment::write_csv(out_path(mcfg, "perturb_mean.csv"), mode_header("a", m), r.stats.mean);
  experiment::write_csv(out_path(mcfg, "perturb_std.csv"), mode_header("a", m), r.stats.std);
  experiment::write_csv(out_path(mcfg, "perturb_deviation.csv"), {"mean_abs_deviation"}, r.mean_abs_deviation);
  say("perturbation study: " + std::to_string(r.members.size()) + " draws, final mean |deviation| " +
      std::to_string(r.mean_abs_deviation.size() ? r.mean_abs_deviation(r.mean_abs_deviation.size() - 1) : 0.0));
  return 0;
}

int cmd_metrics(const GlobalOptions& g, const std::string& pred_path, std::optional<Index> start,
                const std::string& pod_file) {
  const auto cfg = load_config(g);
  const auto truth = load_data(cfg);
  const auto pred = data::load_series(pred_path);
  if (!(pred.mask == truth.mask) || !(pred.series.grid == truth.series.grid)) {
    throw DomainError("prediction and truth grids differ");
  }
  Index s0 = 0;
  if (start) {
    s0 = *start;
  } else {
    if (pred.series.dates.empty()) throw DomainError("prediction has no dates; pass --start");
    const auto& d = truth.series.dates;
    const auto it = std::find(d.begin(), d.end(), pred.series.dates.front());
    if (it == d.end()) throw DomainError("first predicted date " + pred.series.dates.front() + " not in the truth");
    s0 = it - d.begin();
  }
  if (s0 < 0 || s0 >= truth.series.n_time) throw DomainError("start outside the truth series");
  const Index overlap = std::min<Index>(pred.series.n_time, truth.series.n_time - s0);
  const Eigen::MatrixXd p = data::flatten(pred.series, pred.mask).leftCols(overlap);
  const Eigen::MatrixXd t = data::flatten(truth.series, truth.mask).middleCols(s0, overlap);
  std::vector<Index> region;
  try {
    region = data::region_indices(truth.mask, truth.series.grid, cfg.region);
  } catch (const DomainError&) {
  }
  metrics::MetricReport r;
  r.horizon = static_cast<int>(overlap);
  r.rmse_grid = metrics::rmse(p, t, {}, cfg.exec);
  r.rmse_region = region.empty() ? std::nan("") : metrics::rmse(p, t, region, cfg.exec);
  r.rmnse_modal = std::nan("");
  r.recon_floor = std::nan("");
  if (!pod_file.empty()) {
    const auto pod = pod::PodModel::load(pod_file);
    r.recon_floor = metrics::reconstruction_floor(pod.basis, t, {}, cfg.exec);
    const Eigen::MatrixXd pa = pod::project_all(pod.basis, p, cfg.exec);
    const Eigen::MatrixXd ta = pod::project_all(pod.basis, t, cfg.exec);
    if (overlap > 1) r.rmnse_modal = metrics::rmnse(pa, ta);
  }
  write_json(out_path(cfg, "metrics.json"), report_json(r));
  say(r.to_json());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Higher-order quantum reservoir forecasting of POD-reduced gridded data"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions g;
  app.add_option("-c,--config", g.config, "JSON experiment configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Master seed (overrides the config)");
  app.add_option("--out-dir", g.out_dir, "Output directory (overrides the config)");
  app.add_option("--data", g.data, "Input GSF dataset (overrides the config)");
  app.add_option("--mask-sentinel", g.mask_sentinel, "Value written to land cells of output grids");
  app.add_flag("--serial", g.serial, "Use the serial reference kernels");

  int status = 0;

  auto* synth = app.add_subcommand("synth", "Generate a deterministic synthetic GSF dataset");
  data::SynthSpec spec;
  std::string kind = "sinusoid-mix", synth_out;
  synth->add_option("--kind", kind, "sinusoid-mix | noisy-seasonal")->capture_default_str();
  synth->add_option("--n-lat", spec.n_lat)->capture_default_str();
  synth->add_option("--n-lon", spec.n_lon)->capture_default_str();
  synth->add_option("--n-time", spec.n_time)->capture_default_str();
  synth->add_option("--rank", spec.rank, "Number of spatial patterns")->capture_default_str();
  synth->add_option("--amplitude", spec.amplitude)->capture_default_str();
  synth->add_option("-o,--output", synth_out, "Output file (default <out-dir>/synth.gsf)");
  synth->callback([&] { status = cmd_synth(g, spec, kind, synth_out); });

  auto* pod = app.add_subcommand("pod", "Fit or apply the POD basis");
  pod->require_subcommand(1);
  pod->add_subcommand("fit", "Fit POD on the training span")->callback([&] { status = cmd_pod_fit(g); });
  std::string pod_model;
  auto* pod_apply = pod->add_subcommand("apply", "Project a dataset onto a fitted basis");
  pod_apply->add_option("--pod", pod_model, "pod.bin (default <out-dir>/pod.bin)");
  pod_apply->callback([&] { status = cmd_pod_apply(g, pod_model); });

  app.add_subcommand("train", "Train the configured model")->callback([&] { status = cmd_train(g); });

  auto* fc = app.add_subcommand("forecast", "Closed-loop forecasts from a trained model");
  std::string model_dir;
  std::vector<int> starts;
  std::optional<int> horizon;
  fc->add_option("--model", model_dir, "Model directory (default <out-dir>/model)");
  fc->add_option("--start", starts, "Rollout start(s), relative to the test span");
  fc->add_option("--horizon", horizon, "Prediction length");
  fc->callback([&] { status = cmd_forecast(g, model_dir, starts, horizon); });

  app.add_subcommand("sweep", "Grid search, ranking and top-k ensemble")->callback([&] { status = cmd_sweep(g); });

  auto* ablate = app.add_subcommand("ablate", "Ablation studies");
  ablate->require_subcommand(1);
  ablate->add_subcommand("washout", "Washout length")->callback([&] { status = cmd_ablate_washout(g); });
  std::string axis;
  auto* structure = ablate->add_subcommand("structure", "Reservoir structure");
  structure->add_option("--axis", axis, "n_qubits | n_reservoirs | coupling_j | tau");
  structure->callback([&] { status = cmd_ablate_structure(g, axis); });
  ablate->add_subcommand("modes", "Number of POD modes")->callback([&] { status = cmd_ablate_modes(g); });

  auto* perturb = app.add_subcommand("perturb", "Sensitivity to perturbed initial inputs");
  std::string perturb_model;
  perturb->add_option("--model", perturb_model, "Model directory (trains one when omitted)");
  perturb->callback([&] { status = cmd_perturb(g, perturb_model); });

  auto* met = app.add_subcommand("metrics", "Compare predicted grids with the dataset");
  std::string pred_path, metrics_pod;
  std::optional<Index> metrics_start;
  met->add_option("--pred", pred_path, "Predicted GSF file")->required()->check(CLI::ExistingFile);
  met->add_option("--start", metrics_start, "Truth index of the first prediction (default: matched by date)");
  met->add_option("--pod", metrics_pod, "pod.bin for the modal error and reconstruction floor");
  met->callback([&] { status = cmd_metrics(g, pred_path, metrics_start, metrics_pod); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return 3;
  } catch (const DomainError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return status;
}
