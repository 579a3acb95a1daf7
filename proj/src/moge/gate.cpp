#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <stdexcept>

#include "adamoge/errors.hpp"
#include "adamoge/moge.hpp"
#include "adamoge/ops.hpp"

namespace adamoge::moge {

GateMode parse_gate_mode(const std::string& name) {
  if (name == "dual") return GateMode::Dual;
  if (name == "mlp") return GateMode::Mlp;
  if (name == "fixed") return GateMode::Fixed;
  throw ConfigError("unknown gate mode '" + name + "' (expected dual, mlp or fixed)");
}

std::string gate_mode_name(GateMode mode) {
  switch (mode) {
    case GateMode::Dual: return "dual";
    case GateMode::Mlp: return "mlp";
    case GateMode::Fixed: return "fixed";
  }
  return "dual";
}

double expert_count_estimate(double logit, std::size_t e_max) {
  const double s = logit >= 0.0 ? 1.0 / (1.0 + std::exp(-logit)) : std::exp(logit) / (1.0 + std::exp(logit));
  return 1.0 + static_cast<double>(e_max - 1) * s;
}

std::size_t round_expert_count(double k_hat, std::size_t e_max) {
  const double r = std::round(k_hat);
  return static_cast<std::size_t>(std::clamp(r, 1.0, static_cast<double>(e_max)));
}

namespace {

// Expert ids sorted by descending probability, lower id first on ties.
std::vector<std::size_t> ranking(std::span<const double> probs) {
  std::vector<std::size_t> order(probs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });
  return order;
}

}  // namespace

GateDecision select_topk(std::span<const double> probs, std::size_t k) {
  if (k < 1 || k > probs.size()) {
    throw std::invalid_argument("top-k: k = " + std::to_string(k) + " outside [1, " +
                                std::to_string(probs.size()) + "]");
  }
  const auto order = ranking(probs);
  GateDecision d;
  d.k = k;
  d.indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
  double total = 0.0;
  for (auto i : d.indices) total += probs[i];
  for (auto i : d.indices) d.weights.push_back(probs[i] / total);
  return d;
}

Var topk_weights(Var probs, Var k_hat, const std::vector<std::size_t>& k) {
  const auto& p = probs.value();
  const std::size_t B = p.dim(0), E = p.dim(1);
  if (k.size() != B) throw std::invalid_argument("top-k: one expert count per sample required");

  Tensor w({B, E});
  auto rank = std::make_shared<std::vector<std::size_t>>(B * E);
  auto total = std::make_shared<std::vector<double>>(B);
  for (std::size_t b = 0; b < B; ++b) {
    const auto row = p.data().subspan(b * E, E);
    if (k[b] < 1 || k[b] > E) throw std::invalid_argument("top-k: expert count out of range");
    const auto order = ranking(row);
    double s = 0.0;
    for (std::size_t r = 0; r < E; ++r) {
      (*rank)[b * E + order[r]] = r;
      if (r < k[b]) s += row[order[r]];
    }
    (*total)[b] = s;
    for (std::size_t r = 0; r < k[b]; ++r) w.at(b, order[r]) = row[order[r]] / s;
  }

  const auto pi = probs.id;
  const auto ki = k_hat.valid() ? k_hat.id : Var::kNone;
  return probs.tape->push(std::move(w), {probs, k_hat}, [pi, ki, B, E, k, rank, total](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    const auto& w = t.value(self);
    const auto& p = t.value(pi);
    const bool want_p = t.requires_grad(pi);
    const bool want_k = ki != Var::kNone && t.requires_grad(ki);
    for (std::size_t b = 0; b < B; ++b) {
      double gw_dot_w = 0.0;
      for (std::size_t e = 0; e < E; ++e) gw_dot_w += g.at(b, e) * w.at(b, e);
      const double s = (*total)[b];
      std::size_t last = E, next = E;
      for (std::size_t e = 0; e < E; ++e) {
        const std::size_t r = (*rank)[b * E + e];
        if (want_p && r < k[b]) t.grad(pi).at(b, e) += (g.at(b, e) - gw_dot_w) / s;
        if (r + 1 == k[b]) last = e;
        if (r == k[b]) next = e;
      }
      if (!want_k) continue;
      double slope = 0.0;
      int sides = 0;
      if (k[b] > 1) {
        const double pl = p.at(b, last);
        slope += pl / (s - pl) * (g.at(b, last) - gw_dot_w);
        ++sides;
      }
      if (next < E) {
        const double pn = p.at(b, next);
        slope += pn / (s + pn) * (g.at(b, next) - gw_dot_w);
        ++sides;
      }
      if (sides > 0) t.grad(ki)[b] += slope / sides;
    }
  });
}

Tensor next_expert_mask(const Tensor& probs, const std::vector<std::size_t>& k) {
  const std::size_t B = probs.dim(0), E = probs.dim(1);
  Tensor mask({B, E});
  for (std::size_t b = 0; b < B; ++b) {
    if (k[b] >= E) continue;
    mask.at(b, ranking(probs.data().subspan(b * E, E))[k[b]]) = 1.0;
  }
  return mask;
}

namespace {

Tensor uniform_init(Shape shape, std::size_t fan_in, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor t(std::move(shape));
  for (auto& v : t.storage()) v = dist(rng);
  return t;
}

}  // namespace

Gate::Gate(ParameterStore& store, const std::string& prefix, std::size_t input_dim, std::size_t hidden,
           std::size_t e_max, GateMode mode, std::size_t fixed_k, std::mt19937_64& rng)
    : mode_(mode), input_dim_(input_dim), e_max_(e_max), fixed_k_(fixed_k) {
  if (hidden < 1) throw std::invalid_argument("gate hidden width must be at least 1");
  if (mode == GateMode::Fixed && (fixed_k < 1 || fixed_k > e_max)) {
    throw ConfigError("model.fixed_k must lie in [1, model.e_max]");
  }
  if (mode != GateMode::Fixed) {
    w1_ = &store.add(prefix + "gate.w1", uniform_init({hidden, input_dim}, input_dim, rng));
    b1_ = &store.add(prefix + "gate.b1", Tensor({hidden}));
    w2_ = &store.add(prefix + "gate.w2", uniform_init({1, hidden}, hidden, rng));
    b2_ = &store.add(prefix + "gate.b2", Tensor({1}));
  }
  // Zero-initialized so an untrained gate is uniform over experts.
  wg_ = &store.add(prefix + "gate.wg", Tensor({e_max, input_dim}));
  bg_ = &store.add(prefix + "gate.bg", Tensor({e_max}));
}

std::vector<std::string> Gate::count_head_parameters() const {
  if (!w1_) return {};
  return {w1_->name, b1_->name, w2_->name, b2_->name};
}

Gate::Output Gate::forward(Tape& tape, Var features) const {
  if (features.shape().size() != 2 || features.shape()[1] != input_dim_) {
    throw std::invalid_argument("gate expects (B x " + std::to_string(input_dim_) + ") features, got " +
                                shape_string(features.shape()));
  }
  const std::size_t B = features.shape()[0];
  Output out;
  out.probs = ops::softmax_rows(ops::linear(features, tape.parameter(*wg_), tape.parameter(*bg_)));
  if (mode_ == GateMode::Fixed) {
    out.k.assign(B, fixed_k_);
    return out;
  }
  const Var hidden = ops::relu(ops::linear(features, tape.parameter(*w1_), tape.parameter(*b1_)));
  const Var z = ops::linear(hidden, tape.parameter(*w2_), tape.parameter(*b2_));
  out.k_hat = ops::add_scalar(ops::scale(ops::sigmoid(z), static_cast<double>(e_max_ - 1)), 1.0);
  out.k.resize(B);
  for (std::size_t b = 0; b < B; ++b) out.k[b] = round_expert_count(out.k_hat.value()[b], e_max_);
  return out;
}

ExpertCount predict_expert_count(const Tensor& features, const Gate& gate) {
  Tape tape;
  const auto out = gate.forward(tape, tape.constant(features));
  ExpertCount c;
  c.k = out.k;
  if (out.k_hat.valid()) {
    c.k_hat.assign(out.k_hat.value().data().begin(), out.k_hat.value().data().end());
  } else {
    c.k_hat.assign(out.k.begin(), out.k.end());
  }
  return c;
}

Tensor gate_probabilities(const Tensor& features, const Gate& gate) {
  Tape tape;
  return gate.forward(tape, tape.constant(features)).probs.value();
}

}  // namespace adamoge::moge
