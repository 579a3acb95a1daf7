#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "adamoge/data.hpp"
#include "adamoge/parameter.hpp"

namespace adamoge::cli {

// Binary layout, all integers little-endian:
//   "ADAMOGE1" | u64 fingerprint | u64 entry count |
//   entries: u32 name length, name bytes, u32 rank, u64 dims[rank], f64 values
struct Checkpoint {
  struct Entry {
    std::string name;
    Tensor value;
  };

  std::uint64_t fingerprint = 0;
  std::vector<Entry> entries;

  const Entry* find(const std::string& name) const;
};

inline constexpr char kCheckpointMagic[] = "ADAMOGE1";

void write_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::string& path);

// Every parameter of the store plus the normalization statistics, stored as
// `data.norm.mean` and `data.norm.std`.
Checkpoint make_checkpoint(std::uint64_t fingerprint, const ParameterStore& store, const data::NormStats& stats);

// Copies every store parameter from the checkpoint. Missing names or shape
// differences throw ConfigError.
void restore_parameters(const Checkpoint& ckpt, ParameterStore& store);
data::NormStats norm_stats(const Checkpoint& ckpt);

// Throws ConfigError on a mismatch unless `allow` is set.
void check_fingerprint(const Checkpoint& ckpt, std::uint64_t expected, bool allow);

}  // namespace adamoge::cli
