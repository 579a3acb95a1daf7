#include "adamoge/commands.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <memory>

#include <CLI11.hpp>

#include "adamoge/checkpoint.hpp"
#include "adamoge/errors.hpp"
#include "adamoge/kernels.hpp"
#include "adamoge/spectral.hpp"
#include "adamoge/training.hpp"

namespace fs = std::filesystem;

namespace adamoge::cli {

namespace {

std::string dataset_name(const std::string& path) { return fs::path(path).stem().string(); }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

void write_report(const fs::path& dir, const std::string& stem, const training::EvalReport& report) {
  write_text(dir / (stem + ".json"), report.to_json() + "\n");
  write_text(dir / (stem + ".csv"), training::EvalReport::csv_header() + "\n" + report.csv_row() + "\n");
}

std::string checkpoint_path(const CommandOptions& o, const RunConfig& cfg) {
  return o.checkpoint.empty() ? (fs::path(cfg.out_dir) / "model.ckpt").string() : o.checkpoint;
}

struct LoadedModel {
  std::unique_ptr<moge::AdaMoGe> model;
  data::NormStats stats;
};

LoadedModel load_model(const CommandOptions& o, const RunConfig& cfg, std::size_t vars) {
  const Checkpoint ckpt = read_checkpoint(checkpoint_path(o, cfg));
  check_fingerprint(ckpt, cfg.fingerprint(), o.allow_fingerprint_mismatch);
  LoadedModel lm{std::make_unique<moge::AdaMoGe>(cfg.model_config(vars), cfg.train.seed), norm_stats(ckpt)};
  if (lm.stats.mean.size() != vars) {
    throw DataError("checkpoint was trained on " + std::to_string(lm.stats.mean.size()) + " variables, data has " +
                    std::to_string(vars));
  }
  restore_parameters(ckpt, lm.model->parameters());
  return lm;
}

// Normalized (1 x L x V) window ending just before `origin`.
Tensor window_before(const data::SeriesTable& table, std::size_t origin, std::size_t lookback,
                     const data::NormStats& stats) {
  if (origin < lookback) {
    throw DataError("origin row " + std::to_string(origin) + " has fewer than " + std::to_string(lookback) +
                    " rows of history");
  }
  if (origin > table.rows()) {
    throw DataError("origin row " + std::to_string(origin) + " is past the end of the series (" +
                    std::to_string(table.rows()) + " rows)");
  }
  const std::size_t V = table.vars();
  Tensor w({1, lookback, V});
  for (std::size_t t = 0; t < lookback; ++t)
    for (std::size_t v = 0; v < V; ++v)
      w.at(0, t, v) = (table.values.at(origin - lookback + t, v) - stats.mean[v]) / stats.std[v];
  return w;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  return out;
}

}  // namespace

RunConfig resolve_config(const CommandOptions& o) {
  RunConfig cfg = o.config_path.empty() ? RunConfig{} : RunConfig::load(o.config_path);
  for (const auto& kv : o.overrides) cfg.apply_override(kv);
  if (o.seed) cfg.train.seed = *o.seed;
  if (o.out_dir) cfg.out_dir = *o.out_dir;
  cfg.train.validate();
  return cfg;
}

int cmd_train(const CommandOptions& o) {
  RunConfig cfg = resolve_config(o);
  const auto raw = data::load_csv(cfg.data_path);
  const auto ds = training::Dataset::prepare(raw, cfg.kind, cfg.lookback, cfg.horizon, dataset_name(cfg.data_path));
  const fs::path dir(cfg.out_dir);
  fs::create_directories(dir);

  training::FitOptions fo;
  fo.verbose = o.verbose;
  training::EvalReport report;
  bool diverged = false;

  if (o.grid) {
    // The checkpoint and report carry the fingerprint of the winning configuration.
    std::unique_ptr<Checkpoint> ckpt;
    RunConfig best_cfg = cfg;
    const auto result = training::grid_search(cfg.model_config(raw.vars()), ds, cfg.train, fo,
                                              [&](const moge::AdaMoGe& m) {
                                                best_cfg.model.e_max = m.config().e_max;
                                                best_cfg.model.depth = m.config().depth;
                                                best_cfg.model.feature_dim = m.config().feature_dim;
                                                ckpt = std::make_unique<Checkpoint>(make_checkpoint(
                                                    best_cfg.fingerprint(), m.parameters(), ds.stats));
                                              });
    report = result.best;
    report.fingerprint = best_cfg.fingerprint_hex();
    write_checkpoint((dir / "model.ckpt").string(), *ckpt);
    write_text(dir / "run.conf", best_cfg.to_text());
    std::ostringstream grid;
    grid << "rank,e_max,depth,feature_dim,val_mse,diverged\n" << std::setprecision(17);
    for (std::size_t i = 0; i < result.ranked.size(); ++i) {
      const auto& g = result.ranked[i];
      grid << i + 1 << ',' << g.e_max << ',' << g.depth << ',' << g.feature_dim << ',' << g.val_mse << ','
           << (g.diverged ? 1 : 0) << '\n';
    }
    write_text(dir / "grid.csv", grid.str());
  } else {
    fo.fingerprint = cfg.fingerprint_hex();
    moge::AdaMoGe model(cfg.model_config(raw.vars()), cfg.train.seed);
    const auto result = training::fit(model, ds, cfg.train, fo);
    report = result.report;
    diverged = result.diverged;
    write_checkpoint((dir / "model.ckpt").string(), make_checkpoint(cfg.fingerprint(), model.parameters(), ds.stats));
    write_text(dir / "run.conf", cfg.to_text());
  }
  write_report(dir, "report", report);
  std::cout << report.to_json() << '\n';
  if (diverged) {
    std::cerr << "error: training diverged; the best finite parameters were saved\n";
    return kNumericFailure;
  }
  return kOk;
}

int cmd_eval(const CommandOptions& o) {
  const RunConfig cfg = resolve_config(o);
  if (cfg.train.threads > 0) kernels::set_num_threads(cfg.train.threads);
  const auto start = std::chrono::steady_clock::now();
  const auto raw = data::load_csv(o.csv.empty() ? cfg.data_path : o.csv);
  const auto lm = load_model(o, cfg, raw.vars());
  const auto split = data::make_split(raw.rows(), cfg.kind, cfg.lookback, cfg.horizon);
  const auto table = data::apply_norm(raw, lm.stats);
  const auto m = training::evaluate(*lm.model, table, split.test, cfg.train.batch_size);

  training::EvalReport report;
  report.dataset = dataset_name(o.csv.empty() ? cfg.data_path : o.csv);
  report.horizon = cfg.horizon;
  report.mse = m.mse;
  report.mae = m.mae;
  report.params = lm.model->parameter_count();
  report.fingerprint = cfg.fingerprint_hex();
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  fs::create_directories(cfg.out_dir);
  write_report(cfg.out_dir, "eval", report);
  std::cout << report.to_json() << '\n';
  return kOk;
}

int cmd_predict(const CommandOptions& o) {
  const RunConfig cfg = resolve_config(o);
  if (!o.origin) throw ConfigError("predict needs --origin");
  const auto table = data::load_csv(o.csv.empty() ? cfg.data_path : o.csv);
  const auto lm = load_model(o, cfg, table.vars());
  const std::size_t origin = *o.origin, L = cfg.lookback, V = table.vars();
  const Tensor window = window_before(table, origin, L, lm.stats);
  const Tensor forecast = data::denormalize(lm.model->predict(window), lm.stats);

  std::ofstream file;
  if (!o.output.empty()) file = open_output(o.output);
  std::ostream& out = o.output.empty() ? std::cout : file;
  out << "part,row";
  for (const auto& n : table.names) out << ',' << n;
  out << '\n' << std::setprecision(17);
  for (std::size_t t = origin - L; t < origin; ++t) {
    out << "history," << t;
    for (std::size_t v = 0; v < V; ++v) out << ',' << table.values.at(t, v);
    out << '\n';
  }
  for (std::size_t h = 0; h < cfg.horizon; ++h) {
    out << "forecast," << origin + h;
    for (std::size_t v = 0; v < V; ++v) out << ',' << forecast.at(0, h, v);
    out << '\n';
  }
  return kOk;
}

SpectrumReport inspect_spectrum(const moge::AdaMoGe& model, const Tensor& window) {
  const auto& mc = model.config();
  const Tensor w = window.rank() == 3 ? window : window.reshaped({1, window.dim(0), window.dim(1)});
  if (w.dim(0) != 1) throw std::invalid_argument("inspect_spectrum takes a single window");
  Tape tape;
  std::vector<moge::BlockTrace> trace;
  model.forward(tape, tape.constant(w), &trace);
  const auto& t = trace.front();
  const auto& bank = model.bank(0);
  const std::size_t E = mc.e_max;

  SpectrumReport r;
  r.mu.assign(t.mu.value().data().begin(), t.mu.value().data().end());
  r.e.assign(t.e.value().data().begin(), t.e.value().data().end());
  r.cutoffs = bank.cutoffs();
  if (bank.learnable()) {
    const auto spec = spectral::SpectrumBatch::from_windows(w);
    for (std::size_t e = 0; e < E; ++e) r.sigma.push_back(bank.adaptive_sigma(e, spec).front());
  }
  r.responses = t.responses.value().reshaped({E, bank.bins()});
  r.probs.assign(t.probs.value().data().begin(), t.probs.value().data().end());
  r.k_hat = t.k_hat.valid() ? t.k_hat.value()[0] : std::numeric_limits<double>::quiet_NaN();
  r.k = t.k.front();
  const auto decision = moge::select_topk(r.probs, r.k);
  r.selected = decision.indices;
  r.weights = decision.weights;
  return r;
}

void write_spectrum_csv(std::ostream& out, const SpectrumReport& r) {
  out << "section,i,j,value\n" << std::setprecision(17);
  for (std::size_t f = 0; f < r.mu.size(); ++f) out << "mu," << f << ",0," << r.mu[f] << '\n';
  for (std::size_t v = 0; v < r.e.size(); ++v) out << "e," << v << ",0," << r.e[v] << '\n';
  for (std::size_t e = 0; e < r.cutoffs.size(); ++e) {
    out << "f1," << e << ",0," << r.cutoffs[e].f1 << '\n';
    out << "f2," << e << ",0," << r.cutoffs[e].f2 << '\n';
    if (!r.sigma.empty()) out << "sigma," << e << ",0," << r.sigma[e] << '\n';
  }
  for (std::size_t e = 0; e < r.responses.dim(0); ++e)
    for (std::size_t f = 0; f < r.responses.dim(1); ++f) out << "response," << e << ',' << f << ',' << r.responses.at(e, f) << '\n';
  for (std::size_t e = 0; e < r.probs.size(); ++e) out << "prob," << e << ",0," << r.probs[e] << '\n';
  if (!std::isnan(r.k_hat)) out << "k_hat,0,0," << r.k_hat << '\n';
  out << "k,0,0," << r.k << '\n';
  for (std::size_t i = 0; i < r.selected.size(); ++i) {
    out << "selected," << i << ",0," << r.selected[i] << '\n';
    out << "weight," << i << ',' << r.selected[i] << ',' << r.weights[i] << '\n';
  }
}

int cmd_inspect_spectrum(const CommandOptions& o) {
  const RunConfig cfg = resolve_config(o);
  if (!o.origin) throw ConfigError("inspect-spectrum needs --origin");
  const auto table = data::load_csv(o.csv.empty() ? cfg.data_path : o.csv);

  LoadedModel lm;
  if (o.checkpoint.empty() && !fs::exists(fs::path(cfg.out_dir) / "model.ckpt")) {
    // No checkpoint: an untrained model, normalized by the file's own training split.
    lm.model = std::make_unique<moge::AdaMoGe>(cfg.model_config(table.vars()), cfg.train.seed);
    data::Range train{0, table.rows()};
    try {
      train = data::make_split(table.rows(), cfg.kind, cfg.lookback, cfg.horizon).train;
    } catch (const DataError&) {
    }
    lm.stats = data::fit_norm(table, train);
  } else {
    lm = load_model(o, cfg, table.vars());
  }
  const Tensor window = window_before(table, *o.origin, cfg.lookback, lm.stats);
  const auto report = inspect_spectrum(*lm.model, window);

  std::ofstream file;
  if (!o.output.empty()) file = open_output(o.output);
  write_spectrum_csv(o.output.empty() ? std::cout : file, report);
  return kOk;
}

namespace {

int run_synth(const data::SinusoidSpec& spec, const std::string& output) {
  if (output.empty()) throw ConfigError("synth needs --output");
  data::write_csv(data::make_sinusoid_table(spec), output);
  return kOk;
}

void add_common(CLI::App* cmd, CommandOptions& o) {
  cmd->add_option("--config", o.config_path, "Run configuration file");
  cmd->add_option("--override", o.overrides, "Override a config key: key=value (repeatable)");
  cmd->add_option("--seed", o.seed, "Random seed (train.seed)");
  cmd->add_option("--out", o.out_dir, "Output directory (out.dir)");
  cmd->add_flag("--allow-fingerprint-mismatch", o.allow_fingerprint_mismatch,
                "Load checkpoints whose config fingerprint differs");
  cmd->add_flag("-v,--verbose", o.verbose, "Log progress to stderr");
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Spectral mixture-of-experts time-series forecasting"};
  app.require_subcommand(1);
  CommandOptions o;
  data::SinusoidSpec synth;
  std::string synth_output;

  auto* train = app.add_subcommand("train", "Train a model and write checkpoint and report");
  add_common(train, o);
  train->add_flag("--grid", o.grid, "Grid search over grid.e_max x grid.depth x grid.feature_dim");

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on the test split");
  add_common(eval, o);
  eval->add_option("--checkpoint", o.checkpoint, "Checkpoint file (default <out.dir>/model.ckpt)");
  eval->add_option("--csv", o.csv, "Dataset file (default data.path)");

  auto* predict = app.add_subcommand("predict", "Forecast the horizon after one origin row");
  add_common(predict, o);
  predict->add_option("--checkpoint", o.checkpoint, "Checkpoint file (default <out.dir>/model.ckpt)");
  predict->add_option("--csv", o.csv, "Series file (default data.path)");
  predict->add_option("--origin", o.origin, "First forecast row; the window is the lookback rows before it")
      ->required();
  predict->add_option("--output", o.output, "Forecast CSV (default stdout)");

  auto* inspect = app.add_subcommand("inspect-spectrum", "Spectral features, filters and gate decision for one window");
  add_common(inspect, o);
  inspect->add_option("--checkpoint", o.checkpoint, "Checkpoint file (default <out.dir>/model.ckpt)");
  inspect->add_option("--csv", o.csv, "Series file (default data.path)");
  inspect->add_option("--origin", o.origin, "Row just after the window")->required();
  inspect->add_option("--output", o.output, "Diagnostics CSV (default stdout)");

  auto* gen = app.add_subcommand("synth", "Write a synthetic sinusoid-mixture CSV");
  gen->add_option("--output", synth_output, "Target CSV")->required();
  gen->add_option("--rows", synth.rows, "Rows")->capture_default_str();
  gen->add_option("--vars", synth.vars, "Variables")->capture_default_str();
  gen->add_option("--bins", synth.bins, "Frequencies in cycles per period")->capture_default_str();
  gen->add_option("--period", synth.period, "Period length in rows")->capture_default_str();
  gen->add_option("--snr", synth.snr_db, "Signal-to-noise ratio in dB")->capture_default_str();
  gen->add_option("--seed", synth.seed, "Noise and phase seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (train->parsed()) return cmd_train(o);
    if (eval->parsed()) return cmd_eval(o);
    if (predict->parsed()) return cmd_predict(o);
    if (inspect->parsed()) return cmd_inspect_spectrum(o);
    if (gen->parsed()) return run_synth(synth, synth_output);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataFailure;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumericFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}

}  // namespace adamoge::cli
