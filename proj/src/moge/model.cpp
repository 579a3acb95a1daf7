#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "adamoge/errors.hpp"
#include "adamoge/fft.hpp"
#include "adamoge/moge.hpp"
#include "adamoge/ops.hpp"
#include "adamoge/spectral.hpp"

namespace adamoge::moge {

namespace {

Tensor fan_in_uniform(Shape shape, std::size_t fan_in, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor t(std::move(shape));
  for (auto& v : t.storage()) v = dist(rng);
  return t;
}

void validate(const ModelConfig& c) {
  if (c.lookback < 2) throw ConfigError("data.lookback must be at least 2");
  if (c.horizon < 1) throw ConfigError("data.horizon must be at least 1");
  if (c.vars < 1) throw ConfigError("model needs at least one variable");
  if (c.e_max < 1) throw ConfigError("model.e_max must be at least 1");
  if (c.depth < 1) throw ConfigError("model.depth must be at least 1");
  if (c.feature_dim < 1) throw ConfigError("model.feature_dim must be at least 1");
}

}  // namespace

AdaMoGe::AdaMoGe(const ModelConfig& config, std::uint64_t seed) : config_(config) {
  validate(config_);
  std::mt19937_64 rng(seed);
  const std::size_t F = fft::half_bins(config_.lookback);
  const std::size_t gate_in = config_.gate == GateMode::Mlp ? config_.lookback : F + config_.vars;

  for (std::size_t d = 0; d < config_.depth; ++d) {
    const std::string prefix = "block" + std::to_string(d) + ".";
    const bool last = d + 1 == config_.depth;
    const std::size_t out_len = last ? config_.horizon : config_.lookback;

    filterbank::BankConfig bc;
    bc.e_max = config_.e_max;
    bc.bins = F;
    bc.sigma0 = config_.sigma0;
    bc.alpha = config_.alpha;
    bc.sigma_min = config_.sigma_min;
    bc.sigma_max = config_.sigma_max;
    bc.mode = config_.filter_mode;

    filterbank::FilterBank bank(store_, prefix, bc);
    Gate gate(store_, prefix, gate_in, config_.feature_dim, config_.e_max, config_.gate, config_.fixed_k, rng);
    ExpertBank experts(store_, prefix, config_.e_max, F, fft::half_bins(out_len), rng);
    Block block{std::move(bank), std::move(gate), std::move(experts), out_len};
    if (!last) {
      const std::size_t V = config_.vars, H = config_.feature_dim;
      block.ffn_w1 = &store_.add(prefix + "ffn.w1", fan_in_uniform({H, V}, V, rng));
      block.ffn_b1 = &store_.add(prefix + "ffn.b1", Tensor({H}));
      block.ffn_w2 = &store_.add(prefix + "ffn.w2", fan_in_uniform({V, H}, H, rng));
      block.ffn_b2 = &store_.add(prefix + "ffn.b2", Tensor({V}));
    }
    blocks_.push_back(std::move(block));
  }
}

std::vector<std::string> AdaMoGe::count_head_parameters() const {
  std::vector<std::string> names;
  for (const auto& b : blocks_) {
    for (auto& n : b.gate.count_head_parameters()) names.push_back(std::move(n));
  }
  return names;
}

Var AdaMoGe::block_forward(Tape& tape, const Block& block, Var input, BlockTrace* trace) const {
  const CVar spec = spectral::ad::spectrum(input);
  const auto summary = spectral::ad::summarize(spec);
  // chi on the orthonormal-transform scale, O(1) for z-scored windows.
  const Var features = config_.gate == GateMode::Mlp
                           ? ops::mean_axis(input, 2)
                           : ops::scale(summary.chi, 1.0 / std::sqrt(static_cast<double>(config_.lookback)));
  const auto gate = block.gate.forward(tape, features);
  const Var weights = topk_weights(gate.probs, gate.k_hat, gate.k);
  const Var responses = block.bank.responses(tape, spec);
  const Tensor probe = gate.k_hat.valid() ? next_expert_mask(gate.probs.value(), gate.k) : Tensor();
  const CVar mixed = block.experts.mixture(tape, spec, responses, weights, gate.k_hat.valid() ? &probe : nullptr);
  const double amp = static_cast<double>(block.out_len) / static_cast<double>(config_.lookback);
  const Var out = ops::swap_last_axes(ops::irfft(ops::scale(mixed, amp), block.out_len));

  if (trace) {
    *trace = BlockTrace{spec, summary.mu, summary.e, summary.chi, gate.probs, gate.k_hat, gate.k, weights, responses};
  }
  return out;
}

Var AdaMoGe::forward(Tape& tape, Var windows, std::vector<BlockTrace>* trace) const {
  const Shape s = windows.shape();
  if (s.size() != 3 || s[1] != config_.lookback || s[2] != config_.vars) {
    throw std::invalid_argument("model expects (B x " + std::to_string(config_.lookback) + " x " +
                                std::to_string(config_.vars) + ") windows, got " + shape_string(s));
  }
  if (trace) trace->assign(blocks_.size(), BlockTrace{});
  Var u = windows;
  for (std::size_t d = 0; d < blocks_.size(); ++d) {
    const Block& block = blocks_[d];
    const Var y = block_forward(tape, block, u, trace ? &(*trace)[d] : nullptr);
    if (d + 1 == blocks_.size()) return y;

    // Residual band mixing, then a residual per-step feed-forward across variables.
    u = ops::add(u, y);
    const std::size_t B = s[0], L = config_.lookback, V = config_.vars;
    const Var flat = ops::reshape(u, {B * L, V});
    const Var hidden = ops::relu(ops::linear(flat, tape.parameter(*block.ffn_w1), tape.parameter(*block.ffn_b1)));
    const Var ffn = ops::linear(hidden, tape.parameter(*block.ffn_w2), tape.parameter(*block.ffn_b2));
    u = ops::add(u, ops::reshape(ffn, {B, L, V}));
  }
  return u;
}

Tensor AdaMoGe::predict(const Tensor& windows) const {
  Tape tape;
  return forward(tape, tape.constant(windows)).value();
}

DecisionMargins decision_margins(const AdaMoGe& model, const Tensor& windows) {
  Tape tape;
  std::vector<BlockTrace> trace;
  model.forward(tape, tape.constant(windows), &trace);
  DecisionMargins m;
  for (std::size_t d = 0; d < trace.size(); ++d) {
    const auto& t = trace[d];
    const auto& p = t.probs.value();
    const std::size_t B = p.dim(0), E = p.dim(1);
    for (std::size_t b = 0; b < B; ++b) {
      if (t.k_hat.valid()) {
        const double kh = t.k_hat.value()[b];
        m.k_round = std::min(m.k_round, std::abs(kh - (std::floor(kh) + 0.5)));
      }
      if (t.k[b] < E) {
        std::vector<double> row(p.data().begin() + b * E, p.data().begin() + (b + 1) * E);
        std::sort(row.begin(), row.end(), std::greater<>());
        m.topk_gap = std::min(m.topk_gap, row[t.k[b] - 1] - row[t.k[b]]);
      }
    }
    const auto& bank = model.bank(d);
    if (!bank.learnable()) continue;
    const Var power = filterbank::mean_power(t.spectrum);
    const auto cut = bank.cutoffs();
    for (std::size_t b = 0; b < B; ++b)
      for (const auto& c : cut) {
        const double raw = bank.sigma0() * bank.config().alpha / c.center() * power.value()[b];
        m.sigma_clamp = std::min({m.sigma_clamp, std::abs(raw - bank.sigma_min()), std::abs(raw - bank.sigma_max())});
      }
  }
  return m;
}

}  // namespace adamoge::moge
