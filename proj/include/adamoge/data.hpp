#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "adamoge/tensor.hpp"

namespace adamoge::data {

struct SeriesTable {
  std::vector<std::string> timestamps;
  std::vector<std::int64_t> times;  // parsed timestamps, strictly increasing
  Tensor values;                    // (T x V)
  std::vector<std::string> names;   // V labels

  std::size_t rows() const { return values.empty() ? 0 : values.dim(0); }
  std::size_t vars() const { return values.empty() ? 0 : values.dim(1); }
};

// Reads a header-first CSV whose first column is a timestamp and whose other
// columns are numeric. Throws DataError naming the offending row/column.
SeriesTable load_csv(const std::string& path);
void write_csv(const SeriesTable& table, const std::string& path);

// Seconds since the epoch for "YYYY-MM-DD[ HH:MM[:SS]]", or the integer itself
// for a bare integer. Returns nullopt when neither form parses.
std::optional<std::int64_t> parse_timestamp(const std::string& text);

enum class DatasetKind { EttHourly, EttMinute, Ratio };
DatasetKind parse_kind(const std::string& name);
std::string kind_name(DatasetKind kind);

struct Range {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
};

struct SplitSpec {
  Range train, val, test;
};

// Chronological split. ETT hourly uses 12/4/4 months (8640/2880/2880 rows),
// ETT minute four times that, others 7:1:2. Validation and test ranges start
// `lookback` rows early so every target row is covered.
SplitSpec make_split(std::size_t rows, DatasetKind kind, std::size_t lookback, std::size_t horizon);

struct NormStats {
  std::vector<double> mean;
  std::vector<double> std;
};

// Per-variable mean and population std over the range; std floored at 1e-8.
NormStats fit_norm(const SeriesTable& table, Range train);
SeriesTable apply_norm(const SeriesTable& table, const NormStats& stats);
// Inverse of apply_norm for a (... x V) tensor.
Tensor denormalize(const Tensor& values, const NormStats& stats);

struct WindowBatch {
  Tensor x;                          // (B x L x V)
  Tensor y;                          // (B x H x V)
  std::vector<std::size_t> origins;  // first row of each lookback window
};

// Sliding windows over one range. Every origin appears once per epoch: in a
// seeded per-epoch permutation when a shuffle seed is given, ascending
// otherwise. The last partial batch is kept.
class WindowSampler {
 public:
  WindowSampler(const SeriesTable& table, Range range, std::size_t lookback, std::size_t horizon,
                std::size_t batch_size, std::optional<std::uint64_t> shuffle_seed = std::nullopt);

  std::size_t windows() const noexcept { return count_; }
  std::size_t batches() const noexcept { return (count_ + batch_size_ - 1) / batch_size_; }
  std::size_t lookback() const noexcept { return lookback_; }
  std::size_t horizon() const noexcept { return horizon_; }

  void start_epoch(std::size_t epoch);
  WindowBatch batch(std::size_t index) const;

  // Number of batches handed out so far.
  std::size_t served() const noexcept { return served_; }

 private:
  const SeriesTable* table_;
  Range range_;
  std::size_t lookback_, horizon_, batch_size_, count_;
  std::optional<std::uint64_t> seed_;
  std::vector<std::size_t> order_;
  mutable std::size_t served_ = 0;
};

// All batches of one epoch.
std::vector<WindowBatch> make_windows(const SeriesTable& table, Range range, std::size_t lookback,
                                      std::size_t horizon, std::size_t batch_size,
                                      std::optional<std::uint64_t> shuffle_seed = std::nullopt,
                                      std::size_t epoch = 0);

// Synthetic sinusoid mixture: each variable is sum_i amp * sin(2 pi bin_i t / period + phase)
// plus white noise whose power sets the signal-to-noise ratio (dB).
struct SinusoidSpec {
  std::size_t rows = 10000;
  std::size_t vars = 2;
  std::vector<double> bins = {3.0, 17.0};
  std::size_t period = 96;
  double snr_db = 10.0;
  std::uint64_t seed = 1;
};
SeriesTable make_sinusoid_table(const SinusoidSpec& spec);

}  // namespace adamoge::data
