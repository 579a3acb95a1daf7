#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <limits>
#include <memory>
#include <sstream>

#include <json.hpp>

#include "adamoge/errors.hpp"
#include "adamoge/kernels.hpp"
#include "adamoge/ops.hpp"
#include "adamoge/training.hpp"

namespace adamoge::training {

namespace {

using Clock = std::chrono::steady_clock;

std::vector<Tensor> snapshot(const ParameterStore& store) {
  std::vector<Tensor> out;
  for (const auto& p : store) out.push_back(p.value);
  return out;
}

void restore(ParameterStore& store, const std::vector<Tensor>& values) {
  std::size_t i = 0;
  for (auto& p : store) p.value = values[i++];
}

void notify(const FitOptions& options, SplitRead split) {
  if (options.on_read) options.on_read(split);
}

Metrics evaluate_range(const moge::AdaMoGe& model, const data::SeriesTable& table, data::Range range,
                       std::size_t batch_size, const FitOptions* options, SplitRead split) {
  const auto& cfg = model.config();
  data::WindowSampler sampler(table, range, cfg.lookback, cfg.horizon, batch_size);
  double sq = 0.0, ab = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < sampler.batches(); ++i) {
    if (options) notify(*options, split);
    const auto batch = sampler.batch(i);
    const Tensor pred = model.predict(batch.x);
    for (std::size_t j = 0; j < pred.size(); ++j) {
      const double d = pred[j] - batch.y[j];
      sq += d * d;
      ab += std::abs(d);
    }
    count += pred.size();
  }
  return {sq / static_cast<double>(count), ab / static_cast<double>(count)};
}

}  // namespace

Dataset Dataset::prepare(const data::SeriesTable& raw, data::DatasetKind kind, std::size_t lookback,
                         std::size_t horizon, std::string name) {
  Dataset d;
  d.name = std::move(name);
  d.split = data::make_split(raw.rows(), kind, lookback, horizon);
  d.stats = data::fit_norm(raw, d.split.train);
  d.table = data::apply_norm(raw, d.stats);
  d.lookback = lookback;
  d.horizon = horizon;
  return d;
}

Metrics evaluate(const moge::AdaMoGe& model, const data::SeriesTable& table, data::Range range,
                 std::size_t batch_size) {
  return evaluate_range(model, table, range, batch_size, nullptr, SplitRead::Test);
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["dataset"] = dataset;
  j["horizon"] = horizon;
  j["mse"] = mse;
  j["mae"] = mae;
  j["params"] = params;
  j["seconds"] = seconds;
  j["fingerprint"] = fingerprint;
  return j.dump(2);
}

std::string EvalReport::csv_header() { return "dataset,horizon,mse,mae,params,seconds,fingerprint"; }

std::string EvalReport::csv_row() const {
  std::ostringstream out;
  out << dataset << ',' << horizon << ',' << std::setprecision(17) << mse << ',' << mae << ',' << params << ','
      << std::setprecision(6) << seconds << ',' << fingerprint;
  return out.str();
}

FitResult fit(moge::AdaMoGe& model, const Dataset& data, const TrainConfig& config, const FitOptions& options) {
  config.validate();
  const auto& mc = model.config();
  if (mc.lookback != data.lookback || mc.horizon != data.horizon) {
    throw ConfigError("model lookback/horizon do not match the dataset windows");
  }
  if (mc.vars != data.table.vars()) {
    throw ConfigError("model expects " + std::to_string(mc.vars) + " variables, dataset has " +
                      std::to_string(data.table.vars()));
  }
  if (config.threads > 0) kernels::set_num_threads(config.threads);

  const auto start = Clock::now();
  ParameterStore& store = model.parameters();
  store.zero_grad();
  Adam adam(store);
  data::WindowSampler train(data.table, data.split.train, mc.lookback, mc.horizon, config.batch_size, config.seed);
  const std::size_t total_steps = config.epochs * train.batches();

  FitResult result;
  result.best_val_mse = std::numeric_limits<double>::infinity();
  std::vector<Tensor> best = snapshot(store);
  std::size_t step = 0, bad_epochs = 0;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    train.start_epoch(epoch);
    double loss_sum = 0.0;
    try {
      for (std::size_t i = 0; i < train.batches(); ++i) {
        notify(options, SplitRead::Train);
        const auto batch = train.batch(i);
        Tape tape;
        const Var pred = model.forward(tape, tape.constant(batch.x));
        const Var loss = ops::mean_squared_error(pred, batch.y);
        const double value = loss.value()[0];
        if (!std::isfinite(value)) throw NumericError("non-finite training loss", "epoch " + std::to_string(epoch + 1));
        tape.backward(loss);
        adam.step(cosine_lr(step, total_steps, config.base_lr, config.min_lr));
        ++step;
        loss_sum += value;
      }
    } catch (const NumericError& e) {
      if (options.verbose) std::cerr << "diverged: " << e.what() << '\n';
      result.diverged = true;
      result.epochs_run = epoch + 1;
      break;
    }
    result.epochs_run = epoch + 1;
    result.train_loss.push_back(loss_sum / static_cast<double>(train.batches()));

    const double val = evaluate_range(model, data.table, data.split.val, config.batch_size, &options, SplitRead::Val).mse;
    result.val_mse.push_back(val);
    if (!std::isfinite(val)) {
      result.diverged = true;
      break;
    }
    const bool improved = val < result.best_val_mse;
    if (improved) {
      result.best_val_mse = val;
      result.best_epoch = epoch + 1;
      best = snapshot(store);
      bad_epochs = 0;
    } else {
      ++bad_epochs;
    }
    if (options.verbose) {
      std::cerr << "epoch " << epoch + 1 << "  train " << result.train_loss.back() << "  val " << val
                << (improved ? "  *" : "") << '\n';
    }
    if (!improved && bad_epochs >= config.patience) break;
  }

  restore(store, best);
  store.zero_grad();
  const Metrics test = evaluate_range(model, data.table, data.split.test, config.batch_size, &options, SplitRead::Test);
  result.report.dataset = data.name;
  result.report.horizon = mc.horizon;
  result.report.mse = test.mse;
  result.report.mae = test.mae;
  result.report.params = model.parameter_count();
  result.report.fingerprint = options.fingerprint;
  result.report.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return result;
}

std::vector<GridEntry> enumerate_grid(const TrainConfig& config) {
  std::vector<GridEntry> out;
  for (auto e : config.grid_e_max)
    for (auto d : config.grid_depth)
      for (auto f : config.grid_feature_dim) out.push_back({e, d, f, 0.0, false});
  return out;
}

GridResult grid_search(const moge::ModelConfig& base, const Dataset& data, const TrainConfig& config,
                       const FitOptions& options, const std::function<void(const moge::AdaMoGe&)>& on_best) {
  config.validate();
  auto entries = enumerate_grid(config);
  const auto start = Clock::now();

  // Model selection sees train and validation data only.
  FitOptions select = options;
  TrainConfig tc = config;
  std::unique_ptr<moge::AdaMoGe> best_model;
  double best_val = std::numeric_limits<double>::infinity();

  for (std::size_t i = 0; i < entries.size(); ++i) {
    auto& entry = entries[i];
    moge::ModelConfig mc = base;
    mc.e_max = entry.e_max;
    mc.depth = entry.depth;
    mc.feature_dim = entry.feature_dim;
    auto model = std::make_unique<moge::AdaMoGe>(mc, config.seed);
    // fit() ends with a test pass; run the loop on a copy of the split whose
    // test range is the validation range so the test rows stay unread.
    Dataset view = data;
    view.split.test = data.split.val;
    select.on_read = [&](SplitRead s) {
      if (options.on_read) options.on_read(s == SplitRead::Test ? SplitRead::Val : s);
    };
    const FitResult r = fit(*model, view, tc, select);
    entry.val_mse = r.best_val_mse;
    entry.diverged = r.diverged;
    if (options.verbose) {
      std::cerr << "grid e_max=" << entry.e_max << " depth=" << entry.depth << " feature_dim=" << entry.feature_dim
                << "  val " << entry.val_mse << '\n';
    }
    if (entry.val_mse < best_val) {
      best_val = entry.val_mse;
      best_model = std::move(model);
    }
  }
  if (!best_model) throw NumericError("every grid configuration diverged");

  GridResult result;
  result.best_config = best_model->config();
  std::stable_sort(entries.begin(), entries.end(),
                   [](const GridEntry& a, const GridEntry& b) { return a.val_mse < b.val_mse; });
  result.ranked = entries;

  const Metrics test = evaluate_range(*best_model, data.table, data.split.test, config.batch_size, &options,
                                      SplitRead::Test);
  result.best.dataset = data.name;
  result.best.horizon = base.horizon;
  result.best.mse = test.mse;
  result.best.mae = test.mae;
  result.best.params = best_model->parameter_count();
  result.best.fingerprint = options.fingerprint;
  result.best.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  if (on_best) on_best(*best_model);
  return result;
}

}  // namespace adamoge::training
