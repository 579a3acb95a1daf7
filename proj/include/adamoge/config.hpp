#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "adamoge/data.hpp"
#include "adamoge/moge.hpp"
#include "adamoge/training.hpp"

namespace adamoge::cli {

// Flat `key = value` run configuration with dotted section keys. Lines
// starting with '#' are comments. Every key has a default.
struct RunConfig {
  std::string data_path = "data/ETTh1.csv";
  data::DatasetKind kind = data::DatasetKind::EttHourly;
  std::size_t lookback = 96;
  std::size_t horizon = 96;
  moge::ModelConfig model;
  training::TrainConfig train;
  std::string out_dir = "runs/latest";

  static RunConfig load(const std::string& path);
  static RunConfig parse(const std::string& text, const std::string& origin = "<config>");

  // Throws ConfigError naming the key when it is unknown or the value is bad.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  // "K=V"
  void apply_override(const std::string& assignment);

  static const std::vector<std::string>& keys();

  // Every key, one `key = value` line each, in keys() order.
  std::string to_text() const;

  // FNV-1a over the canonical text of every key that can change results
  // (data.path, out.dir and train.threads are excluded).
  std::uint64_t fingerprint() const;
  std::string fingerprint_hex() const;

  moge::ModelConfig model_config(std::size_t vars) const;
};

std::uint64_t fnv1a(const std::string& text);
std::string hex64(std::uint64_t value);

}  // namespace adamoge::cli
