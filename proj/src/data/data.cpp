#include "adamoge/data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "adamoge/errors.hpp"

namespace adamoge::data {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\"");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\"");
  return s.substr(first, last - first + 1);
}

// Howard Hinnant's days_from_civil.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, unsigned& m, unsigned& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp < 10 ? mp + 3 : mp - 9;
  y = static_cast<int>(static_cast<std::int64_t>(yoe) + era * 400 + (m <= 2));
}

std::string format_timestamp(std::int64_t seconds) {
  const std::int64_t days = seconds >= 0 ? seconds / 86400 : -((-seconds + 86399) / 86400);
  const std::int64_t rem = seconds - days * 86400;
  int y;
  unsigned m, d;
  civil_from_days(days, y, m, d);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u %02d:%02d:%02d", y, m, d, static_cast<int>(rem / 3600),
                static_cast<int>(rem % 3600 / 60), static_cast<int>(rem % 60));
  return buf;
}

}  // namespace

std::optional<std::int64_t> parse_timestamp(const std::string& raw) {
  const std::string text = trim(raw);
  if (text.empty()) return std::nullopt;
  std::int64_t integer = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), integer);
  if (ec == std::errc{} && ptr == text.data() + text.size()) return integer;

  int y = 0;
  unsigned mo = 0, d = 0, h = 0, mi = 0, s = 0;
  char tail = 0;
  const int n = std::sscanf(text.c_str(), "%d-%u-%u%*[ T]%u:%u:%u%c", &y, &mo, &d, &h, &mi, &s, &tail);
  if (n < 3 || n == 7 || mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || s > 60) {
    return std::nullopt;
  }
  return days_from_civil(y, mo, d) * 86400 + h * 3600 + mi * 60 + s;
}

SeriesTable load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset file: " + path);

  std::string line;
  if (!std::getline(in, line) || trim(line).empty()) throw DataError("dataset file is empty: " + path);
  const auto header = split_line(line);
  if (header.size() < 2) throw DataError(path + ": need a timestamp column and at least one variable");

  SeriesTable table;
  for (std::size_t c = 1; c < header.size(); ++c) table.names.push_back(trim(header[c]));
  const std::size_t V = table.names.size();
  std::vector<double> values;

  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto cells = split_line(line);
    const std::string where = path + ": row " + std::to_string(row);
    if (cells.size() != V + 1) {
      throw DataError(where + " has " + std::to_string(cells.size()) + " columns, expected " + std::to_string(V + 1));
    }
    const auto t = parse_timestamp(cells[0]);
    if (!t) throw DataError(where + ", column 1 ('" + trim(header[0]) + "'): unparseable timestamp '" + cells[0] + "'");
    if (!table.times.empty() && *t <= table.times.back()) {
      throw DataError(where + ": timestamps must be strictly increasing");
    }
    table.times.push_back(*t);
    table.timestamps.push_back(trim(cells[0]));
    for (std::size_t c = 1; c <= V; ++c) {
      const std::string cell = trim(cells[c]);
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || ec != std::errc{} || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
        throw DataError(where + ", column " + std::to_string(c + 1) + " ('" + table.names[c - 1] +
                        "'): invalid value '" + cell + "'");
      }
      values.push_back(v);
    }
  }
  if (table.times.empty()) throw DataError("dataset file has no data rows: " + path);
  const std::size_t T = table.times.size();
  table.values = Tensor({T, V}, std::move(values));
  return table;
}

void write_csv(const SeriesTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << "date";
  for (const auto& n : table.names) out << ',' << n;
  out << '\n' << std::setprecision(17);
  for (std::size_t t = 0; t < table.rows(); ++t) {
    out << table.timestamps[t];
    for (std::size_t v = 0; v < table.vars(); ++v) out << ',' << table.values.at(t, v);
    out << '\n';
  }
}

DatasetKind parse_kind(const std::string& name) {
  if (name == "ett-hourly") return DatasetKind::EttHourly;
  if (name == "ett-minute") return DatasetKind::EttMinute;
  if (name == "ratio") return DatasetKind::Ratio;
  throw ConfigError("unknown dataset kind '" + name + "' (expected ett-hourly, ett-minute or ratio)");
}

std::string kind_name(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::EttHourly: return "ett-hourly";
    case DatasetKind::EttMinute: return "ett-minute";
    case DatasetKind::Ratio: return "ratio";
  }
  return "ratio";
}

SplitSpec make_split(std::size_t rows, DatasetKind kind, std::size_t lookback, std::size_t horizon) {
  if (rows < lookback + horizon) {
    throw DataError("series of " + std::to_string(rows) + " rows is shorter than lookback + horizon = " +
                    std::to_string(lookback + horizon));
  }
  std::size_t train_end, val_end, test_end;
  if (kind == DatasetKind::Ratio) {
    const auto n_train = static_cast<std::size_t>(static_cast<double>(rows) * 0.7);
    const auto n_test = static_cast<std::size_t>(static_cast<double>(rows) * 0.2);
    train_end = n_train;
    val_end = rows - n_test;
    test_end = rows;
  } else {
    const std::size_t scale = kind == DatasetKind::EttMinute ? 4 : 1;
    const std::size_t month = 30 * 24 * scale;
    train_end = 12 * month;
    val_end = 16 * month;
    test_end = 20 * month;
    if (rows < test_end) {
      throw DataError("ETT split needs " + std::to_string(test_end) + " rows, series has " + std::to_string(rows));
    }
  }
  if (train_end < lookback || val_end < lookback) throw DataError("series too short for the chronological split");
  SplitSpec s{{0, train_end}, {train_end - lookback, val_end}, {val_end - lookback, test_end}};
  for (const auto* r : {&s.train, &s.val, &s.test}) {
    if (r->size() < lookback + horizon) {
      throw DataError("split range [" + std::to_string(r->begin) + ", " + std::to_string(r->end) +
                      ") holds no complete window");
    }
  }
  return s;
}

NormStats fit_norm(const SeriesTable& table, Range train) {
  if (train.size() == 0 || train.end > table.rows()) throw DataError("normalization range is empty or out of bounds");
  const std::size_t V = table.vars();
  NormStats s{std::vector<double>(V, 0.0), std::vector<double>(V, 0.0)};
  const double n = static_cast<double>(train.size());
  for (std::size_t v = 0; v < V; ++v) {
    double mean = 0.0;
    for (std::size_t t = train.begin; t < train.end; ++t) mean += table.values.at(t, v);
    mean /= n;
    double var = 0.0;
    for (std::size_t t = train.begin; t < train.end; ++t) {
      const double d = table.values.at(t, v) - mean;
      var += d * d;
    }
    double sd = std::sqrt(var / n);
    if (sd < 1e-8) {
      std::cerr << "warning: variable '" << (v < table.names.size() ? table.names[v] : std::to_string(v))
                << "' has zero variance on the training range; std floored at 1e-8\n";
      sd = 1e-8;
    }
    s.mean[v] = mean;
    s.std[v] = sd;
  }
  return s;
}

SeriesTable apply_norm(const SeriesTable& table, const NormStats& stats) {
  if (stats.mean.size() != table.vars()) throw DataError("normalization statistics do not match variable count");
  SeriesTable out = table;
  for (std::size_t t = 0; t < table.rows(); ++t)
    for (std::size_t v = 0; v < table.vars(); ++v)
      out.values.at(t, v) = (table.values.at(t, v) - stats.mean[v]) / stats.std[v];
  return out;
}

Tensor denormalize(const Tensor& values, const NormStats& stats) {
  const std::size_t V = stats.mean.size();
  if (values.shape().back() != V) throw std::invalid_argument("denormalize: last axis must equal variable count");
  Tensor out = values;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = out[i] * stats.std[i % V] + stats.mean[i % V];
  return out;
}

WindowSampler::WindowSampler(const SeriesTable& table, Range range, std::size_t lookback, std::size_t horizon,
                             std::size_t batch_size, std::optional<std::uint64_t> shuffle_seed)
    : table_(&table), range_(range), lookback_(lookback), horizon_(horizon), batch_size_(batch_size),
      seed_(shuffle_seed) {
  if (batch_size == 0) throw std::invalid_argument("batch size must be positive");
  if (range.end > table.rows() || range.size() < lookback + horizon) {
    throw DataError("range [" + std::to_string(range.begin) + ", " + std::to_string(range.end) +
                    ") cannot hold a window of " + std::to_string(lookback + horizon) + " rows");
  }
  count_ = range.size() - lookback - horizon + 1;
  start_epoch(0);
}

void WindowSampler::start_epoch(std::size_t epoch) {
  order_.resize(count_);
  std::iota(order_.begin(), order_.end(), range_.begin);
  if (seed_) {
    std::seed_seq seq{static_cast<std::uint32_t>(*seed_), static_cast<std::uint32_t>(*seed_ >> 32),
                      static_cast<std::uint32_t>(epoch)};
    std::mt19937_64 rng(seq);
    std::shuffle(order_.begin(), order_.end(), rng);
  }
}

WindowBatch WindowSampler::batch(std::size_t index) const {
  if (index >= batches()) throw std::out_of_range("batch index out of range");
  const std::size_t first = index * batch_size_;
  const std::size_t B = std::min(batch_size_, count_ - first);
  const std::size_t V = table_->vars();
  WindowBatch wb{Tensor({B, lookback_, V}), Tensor({B, horizon_, V}), {}};
  const auto& src = table_->values;
  for (std::size_t b = 0; b < B; ++b) {
    const std::size_t origin = order_[first + b];
    wb.origins.push_back(origin);
    std::copy_n(src.data().begin() + origin * V, lookback_ * V, wb.x.data().begin() + b * lookback_ * V);
    std::copy_n(src.data().begin() + (origin + lookback_) * V, horizon_ * V, wb.y.data().begin() + b * horizon_ * V);
  }
  ++served_;
  return wb;
}

std::vector<WindowBatch> make_windows(const SeriesTable& table, Range range, std::size_t lookback,
                                      std::size_t horizon, std::size_t batch_size,
                                      std::optional<std::uint64_t> shuffle_seed, std::size_t epoch) {
  WindowSampler sampler(table, range, lookback, horizon, batch_size, shuffle_seed);
  sampler.start_epoch(epoch);
  std::vector<WindowBatch> out;
  for (std::size_t i = 0; i < sampler.batches(); ++i) out.push_back(sampler.batch(i));
  return out;
}

SeriesTable make_sinusoid_table(const SinusoidSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  const double n = static_cast<double>(spec.bins.size());
  const double amplitude = std::sqrt(2.0 / n);  // unit total signal power
  const double noise_sd = std::sqrt(1.0 / std::pow(10.0, spec.snr_db / 10.0));
  std::normal_distribution<double> noise(0.0, noise_sd);

  std::vector<std::vector<double>> phases(spec.vars);
  for (auto& p : phases)
    for (std::size_t i = 0; i < spec.bins.size(); ++i) p.push_back(phase(rng));

  SeriesTable table;
  table.values = Tensor({spec.rows, spec.vars});
  for (std::size_t v = 0; v < spec.vars; ++v) table.names.push_back("x" + std::to_string(v));
  const std::int64_t start = days_from_civil(2020, 1, 1) * 86400;
  for (std::size_t t = 0; t < spec.rows; ++t) {
    table.times.push_back(start + static_cast<std::int64_t>(t) * 3600);
    table.timestamps.push_back(format_timestamp(table.times.back()));
    for (std::size_t v = 0; v < spec.vars; ++v) {
      double x = 0.0;
      for (std::size_t i = 0; i < spec.bins.size(); ++i) {
        x += amplitude * std::sin(2.0 * std::numbers::pi * spec.bins[i] * static_cast<double>(t) /
                                      static_cast<double>(spec.period) + phases[v][i]);
      }
      table.values.at(t, v) = x + noise(rng);
    }
  }
  return table;
}

}  // namespace adamoge::data
