#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "adamoge/data.hpp"
#include "adamoge/moge.hpp"
#include "adamoge/parameter.hpp"

namespace adamoge::training {

// Mean over all elements; throws std::invalid_argument on a shape mismatch.
double mse(const Tensor& pred, const Tensor& target);
double mae(const Tensor& pred, const Tensor& target);

// Bias-corrected Adam over the trainable parameters of a store.
class Adam {
 public:
  explicit Adam(ParameterStore& store, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  // Applies one update and zeroes the gradients. Throws NumericError naming
  // the first parameter with a non-finite gradient; nothing is updated then.
  void step(double lr);
  std::size_t steps() const noexcept { return step_; }

 private:
  std::vector<Parameter*> params_;
  std::vector<Tensor> m_, v_;
  double beta1_, beta2_, eps_;
  std::size_t step_ = 0;
};

double cosine_lr(std::size_t step, std::size_t total_steps, double base_lr, double min_lr);

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  double base_lr = 1e-3;
  double min_lr = 1e-5;
  std::size_t patience = 5;
  std::uint64_t seed = 2024;
  int threads = 0;  // 0: OpenMP default

  std::vector<std::size_t> grid_e_max = {5, 6, 7, 8, 9, 10};
  std::vector<std::size_t> grid_depth = {1, 2, 3, 4};
  std::vector<std::size_t> grid_feature_dim = {8, 16, 32};

  void validate() const;
};

// Normalized series plus the split it is evaluated under.
struct Dataset {
  std::string name;
  data::SeriesTable table;  // z-scored by train statistics
  data::NormStats stats;
  data::SplitSpec split;
  std::size_t lookback = 0;
  std::size_t horizon = 0;

  static Dataset prepare(const data::SeriesTable& raw, data::DatasetKind kind, std::size_t lookback,
                         std::size_t horizon, std::string name);
};

struct Metrics {
  double mse = 0.0;
  double mae = 0.0;
};

// Metrics over every window of `range`, accumulated in ascending origin order.
Metrics evaluate(const moge::AdaMoGe& model, const data::SeriesTable& table, data::Range range,
                 std::size_t batch_size);

struct EvalReport {
  std::string dataset;
  std::size_t horizon = 0;
  double mse = 0.0;
  double mae = 0.0;
  std::size_t params = 0;
  double seconds = 0.0;
  std::string fingerprint;

  std::string to_json() const;
  static std::string csv_header();
  std::string csv_row() const;
};

enum class SplitRead { Train, Val, Test };

struct FitOptions {
  std::string fingerprint;
  bool verbose = false;
  // Called whenever a batch of the named split is read.
  std::function<void(SplitRead)> on_read;
};

struct FitResult {
  EvalReport report;  // test metrics of the best-validation parameters
  double best_val_mse = 0.0;
  std::size_t best_epoch = 0;  // 1-based
  std::size_t epochs_run = 0;
  bool diverged = false;
  std::vector<double> train_loss;  // mean per epoch
  std::vector<double> val_mse;
};

// Trains with the MSE objective, keeps the parameters with the best
// validation MSE and leaves them in `model`. A non-finite loss or gradient
// stops training with the best parameters so far restored.
FitResult fit(moge::AdaMoGe& model, const Dataset& data, const TrainConfig& config,
              const FitOptions& options = {});

struct GridEntry {
  std::size_t e_max = 0;
  std::size_t depth = 0;
  std::size_t feature_dim = 0;
  double val_mse = 0.0;
  bool diverged = false;
};

struct GridResult {
  std::vector<GridEntry> ranked;  // ascending validation MSE
  EvalReport best;                // test metrics of ranked.front() only
  moge::ModelConfig best_config;
};

std::vector<GridEntry> enumerate_grid(const TrainConfig& config);

// Each grid point gets a fresh model seeded with config.seed. `on_best`
// receives the winning model before it is destroyed.
GridResult grid_search(const moge::ModelConfig& base, const Dataset& data, const TrainConfig& config,
                       const FitOptions& options = {},
                       const std::function<void(const moge::AdaMoGe&)>& on_best = {});

}  // namespace adamoge::training
