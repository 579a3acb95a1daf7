#include "adamoge/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iostream>

#include "adamoge/config.hpp"
#include "adamoge/errors.hpp"

namespace adamoge::cli {

namespace {

void put_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 8);
}

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 4);
}

class Reader {
 public:
  Reader(std::istream& in, std::string path) : in_(in), path_(std::move(path)) {}

  void bytes(char* dst, std::size_t n) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) throw DataError("truncated checkpoint: " + path_);
  }
  std::uint64_t u64() {
    unsigned char b[8];
    bytes(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }
  std::uint32_t u32() {
    unsigned char b[4];
    bytes(reinterpret_cast<char*>(b), 4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }

 private:
  std::istream& in_;
  std::string path_;
};

}  // namespace

const Checkpoint::Entry* Checkpoint::find(const std::string& name) const {
  for (const auto& e : entries)
    if (e.name == name) return &e;
  return nullptr;
}

void write_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint: " + path);
  out.write(kCheckpointMagic, 8);
  put_u64(out, ckpt.fingerprint);
  put_u64(out, ckpt.entries.size());
  for (const auto& e : ckpt.entries) {
    put_u32(out, static_cast<std::uint32_t>(e.name.size()));
    out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    put_u32(out, static_cast<std::uint32_t>(e.value.rank()));
    for (auto d : e.value.shape()) put_u64(out, d);
    for (double v : e.value.data()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  if (!out) throw DataError("failed writing checkpoint: " + path);
}

Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  Reader r(in, path);
  char magic[8];
  r.bytes(magic, 8);
  if (std::memcmp(magic, kCheckpointMagic, 8) != 0) throw DataError("not an adamoge checkpoint: " + path);
  Checkpoint ckpt;
  ckpt.fingerprint = r.u64();
  const std::uint64_t count = r.u64();
  for (std::uint64_t i = 0; i < count; ++i) {
    Checkpoint::Entry e;
    const std::uint32_t len = r.u32();
    if (len > 4096) throw DataError("corrupt checkpoint entry name in " + path);
    e.name.resize(len);
    r.bytes(e.name.data(), len);
    const std::uint32_t rank = r.u32();
    if (rank == 0 || rank > 8) throw DataError("corrupt checkpoint rank for '" + e.name + "' in " + path);
    Shape shape(rank);
    std::uint64_t total = 1;
    for (auto& d : shape) {
      d = r.u64();
      if (d == 0 || d > (1ULL << 32)) throw DataError("corrupt checkpoint shape for '" + e.name + "'");
      total *= d;
      if (total > (1ULL << 32)) throw DataError("corrupt checkpoint shape for '" + e.name + "'");
    }
    std::vector<double> values(total);
    for (auto& v : values) v = std::bit_cast<double>(r.u64());
    e.value = Tensor(std::move(shape), std::move(values));
    ckpt.entries.push_back(std::move(e));
  }
  return ckpt;
}

Checkpoint make_checkpoint(std::uint64_t fingerprint, const ParameterStore& store, const data::NormStats& stats) {
  Checkpoint c;
  c.fingerprint = fingerprint;
  for (const auto& p : store) c.entries.push_back({p.name, p.value});
  c.entries.push_back({"data.norm.mean", Tensor::vector(stats.mean)});
  c.entries.push_back({"data.norm.std", Tensor::vector(stats.std)});
  return c;
}

void restore_parameters(const Checkpoint& ckpt, ParameterStore& store) {
  for (auto& p : store) {
    const auto* e = ckpt.find(p.name);
    if (!e) throw ConfigError("checkpoint has no parameter '" + p.name + "'");
    if (e->value.shape() != p.value.shape()) {
      throw ConfigError("checkpoint parameter '" + p.name + "' has shape " + shape_string(e->value.shape()) +
                        ", model expects " + shape_string(p.value.shape()));
    }
    p.value = e->value;
  }
}

data::NormStats norm_stats(const Checkpoint& ckpt) {
  const auto* m = ckpt.find("data.norm.mean");
  const auto* s = ckpt.find("data.norm.std");
  if (!m || !s) throw DataError("checkpoint carries no normalization statistics");
  return {m->value.storage(), s->value.storage()};
}

void check_fingerprint(const Checkpoint& ckpt, std::uint64_t expected, bool allow) {
  if (ckpt.fingerprint == expected) return;
  const std::string msg = "checkpoint fingerprint " + hex64(ckpt.fingerprint) + " does not match config fingerprint " +
                          hex64(expected);
  if (!allow) throw ConfigError(msg + " (pass --allow-fingerprint-mismatch to load anyway)");
  std::cerr << "warning: " << msg << "\n";
}

}  // namespace adamoge::cli
