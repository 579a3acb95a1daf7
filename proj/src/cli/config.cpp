#include "adamoge/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "adamoge/errors.hpp"

namespace adamoge::cli {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::size_t to_size(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc{} || p != v.data() + v.size()) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

int to_int(const std::string& key, const std::string& v) {
  int out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc{} || p != v.data() + v.size()) {
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc{} || p != v.data() + v.size() || !std::isfinite(out)) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
  return out;
}

std::vector<std::size_t> to_list(const std::string& key, const std::string& v) {
  std::vector<std::size_t> out;
  std::stringstream in(v);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(to_size(key, trim(item)));
  if (out.empty()) throw ConfigError(key + ": list must be nonempty");
  return out;
}

// Shortest text that parses back to the same double.
std::string fmt(double v) {
  char buf[40];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string fmt(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

struct Field {
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define SIZE_FIELD(member)                                                                            \
  Field {                                                                                             \
    [](RunConfig& c, const std::string& k, const std::string& v) { c.member = to_size(k, v); },      \
        [](const RunConfig& c) { return std::to_string(c.member); }                                   \
  }
#define DOUBLE_FIELD(member)                                                                          \
  Field {                                                                                             \
    [](RunConfig& c, const std::string& k, const std::string& v) { c.member = to_double(k, v); },    \
        [](const RunConfig& c) { return fmt(c.member); }                                              \
  }
#define LIST_FIELD(member)                                                                            \
  Field {                                                                                             \
    [](RunConfig& c, const std::string& k, const std::string& v) { c.member = to_list(k, v); },      \
        [](const RunConfig& c) { return fmt(c.member); }                                              \
  }

const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = {
      {"data.path", Field{[](RunConfig& c, const std::string&, const std::string& v) { c.data_path = v; },
                          [](const RunConfig& c) { return c.data_path; }}},
      {"data.kind", Field{[](RunConfig& c, const std::string&, const std::string& v) { c.kind = data::parse_kind(v); },
                          [](const RunConfig& c) { return data::kind_name(c.kind); }}},
      {"data.lookback", SIZE_FIELD(lookback)},
      {"data.horizon", SIZE_FIELD(horizon)},
      {"model.e_max", SIZE_FIELD(model.e_max)},
      {"model.depth", SIZE_FIELD(model.depth)},
      {"model.feature_dim", SIZE_FIELD(model.feature_dim)},
      {"model.gate",
       Field{[](RunConfig& c, const std::string&, const std::string& v) { c.model.gate = moge::parse_gate_mode(v); },
             [](const RunConfig& c) { return moge::gate_mode_name(c.model.gate); }}},
      {"model.fixed_k", SIZE_FIELD(model.fixed_k)},
      {"model.filter.mode",
       Field{[](RunConfig& c, const std::string&, const std::string& v) {
               c.model.filter_mode = filterbank::parse_mode(v);
             },
             [](const RunConfig& c) { return filterbank::mode_name(c.model.filter_mode); }}},
      {"model.sigma0", DOUBLE_FIELD(model.sigma0)},
      {"model.alpha", DOUBLE_FIELD(model.alpha)},
      {"model.sigma_min", DOUBLE_FIELD(model.sigma_min)},
      {"model.sigma_max", DOUBLE_FIELD(model.sigma_max)},
      {"train.epochs", SIZE_FIELD(train.epochs)},
      {"train.batch_size", SIZE_FIELD(train.batch_size)},
      {"train.base_lr", DOUBLE_FIELD(train.base_lr)},
      {"train.min_lr", DOUBLE_FIELD(train.min_lr)},
      {"train.patience", SIZE_FIELD(train.patience)},
      {"train.seed", SIZE_FIELD(train.seed)},
      {"train.threads",
       Field{[](RunConfig& c, const std::string& k, const std::string& v) { c.train.threads = to_int(k, v); },
             [](const RunConfig& c) { return std::to_string(c.train.threads); }}},
      {"grid.e_max", LIST_FIELD(train.grid_e_max)},
      {"grid.depth", LIST_FIELD(train.grid_depth)},
      {"grid.feature_dim", LIST_FIELD(train.grid_feature_dim)},
      {"out.dir", Field{[](RunConfig& c, const std::string&, const std::string& v) { c.out_dir = v; },
                        [](const RunConfig& c) { return c.out_dir; }}},
  };
  return table;
}

#undef SIZE_FIELD
#undef DOUBLE_FIELD
#undef LIST_FIELD

const Field& field(const std::string& key) {
  for (const auto& [k, f] : fields())
    if (k == key) return f;
  throw ConfigError("unknown config key '" + key + "'");
}

}  // namespace

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> out = [] {
    std::vector<std::string> k;
    for (const auto& [name, f] : fields()) k.push_back(name);
    return k;
  }();
  return out;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  field(key).set(*this, key, trim(value));
}

std::string RunConfig::get(const std::string& key) const { return field(key).get(*this); }

void RunConfig::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not of the form key=value");
  set(trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

RunConfig RunConfig::parse(const std::string& text, const std::string& origin) {
  RunConfig c;
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(n) + ": expected 'key = value'");
    }
    try {
      c.set(trim(t.substr(0, eq)), t.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

std::string RunConfig::to_text() const {
  std::string out;
  for (const auto& [k, f] : fields()) out += k + " = " + f.get(*this) + "\n";
  return out;
}

std::uint64_t RunConfig::fingerprint() const {
  std::string canon;
  for (const auto& [k, f] : fields()) {
    if (k == "data.path" || k == "out.dir" || k == "train.threads") continue;
    canon += k + "=" + f.get(*this) + "\n";
  }
  return fnv1a(canon);
}

std::string RunConfig::fingerprint_hex() const { return hex64(fingerprint()); }

moge::ModelConfig RunConfig::model_config(std::size_t vars) const {
  moge::ModelConfig m = model;
  m.lookback = lookback;
  m.horizon = horizon;
  m.vars = vars;
  return m;
}

}  // namespace adamoge::cli
