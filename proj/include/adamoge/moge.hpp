#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "adamoge/filterbank.hpp"
#include "adamoge/parameter.hpp"
#include "adamoge/tape.hpp"

namespace adamoge::moge {

// What the expert-count head and gating network consume, and whether K adapts.
enum class GateMode {
  Dual,   // chi = [mu ; E] / sqrt(L), adaptive K
  Mlp,    // time-domain window averaged over variables, adaptive K
  Fixed,  // chi features for the gating network, K fixed
};

GateMode parse_gate_mode(const std::string& name);
std::string gate_mode_name(GateMode mode);

// ---------------------------------------------------------------------------
// Gate

struct GateDecision {
  std::size_t k = 0;
  std::vector<std::size_t> indices;  // in descending probability order
  std::vector<double> weights;       // renormalized, same order as indices
};

// Expert count from the head logit z: k_hat = 1 + (E-1) sigmoid(z), K = round(k_hat).
double expert_count_estimate(double logit, std::size_t e_max);
std::size_t round_expert_count(double k_hat, std::size_t e_max);

// Top-k selection of one probability row; ties go to the lower index.
// Throws std::invalid_argument unless 1 <= k <= p.size().
GateDecision select_topk(std::span<const double> probs, std::size_t k);

// Differentiable top-K mixture weights (B x E). Forward is the hard,
// renormalized selection. Backward routes the renormalization gradient to
// `probs` and, when `k_hat` is valid, a straight-through gradient to k_hat:
// dL/dK is the mean of the one-sided differences of L between the mixtures
// with K-1, K and K+1 experts, linearized in the weights. The K+1 side needs
// the weight gradient of the first unselected expert, so the mixture must
// probe that expert (see next_expert_mask).
Var topk_weights(Var probs, Var k_hat, const std::vector<std::size_t>& k);

// (B x E) indicator of the expert ranked K (the first one left out), if any.
Tensor next_expert_mask(const Tensor& probs, const std::vector<std::size_t>& k);

class Gate {
 public:
  Gate(ParameterStore& store, const std::string& prefix, std::size_t input_dim, std::size_t hidden,
       std::size_t e_max, GateMode mode, std::size_t fixed_k, std::mt19937_64& rng);

  struct Output {
    Var k_hat;                   // (B x 1), invalid in Fixed mode
    std::vector<std::size_t> k;  // per-sample expert count
    Var probs;                   // (B x E)
  };

  Output forward(Tape& tape, Var features) const;

  GateMode mode() const noexcept { return mode_; }
  std::size_t e_max() const noexcept { return e_max_; }
  std::size_t input_dim() const noexcept { return input_dim_; }

  // Names of the parameters behind K (empty in Fixed mode).
  std::vector<std::string> count_head_parameters() const;

 private:
  GateMode mode_;
  std::size_t input_dim_;
  std::size_t e_max_;
  std::size_t fixed_k_;
  Parameter* w1_ = nullptr;
  Parameter* b1_ = nullptr;
  Parameter* w2_ = nullptr;
  Parameter* b2_ = nullptr;
  Parameter* wg_;
  Parameter* bg_;
};

// Plain-tensor views of the gate, for diagnostics and tests.
struct ExpertCount {
  std::vector<double> k_hat;
  std::vector<std::size_t> k;
};
ExpertCount predict_expert_count(const Tensor& features, const Gate& gate);
Tensor gate_probabilities(const Tensor& features, const Gate& gate);

// ---------------------------------------------------------------------------
// Experts

// E complex linear maps from an F-bin input half-spectrum to an Fo-bin output
// half-spectrum, shared across variables.
class ExpertBank {
 public:
  ExpertBank(ParameterStore& store, const std::string& prefix, std::size_t experts,
             std::size_t bins_in, std::size_t bins_out, std::mt19937_64& rng);

  std::size_t experts() const noexcept { return experts_; }
  std::size_t bins_in() const noexcept { return bins_in_; }
  std::size_t bins_out() const noexcept { return bins_out_; }

  Parameter& weight_re() { return *w_re_; }
  Parameter& weight_im() { return *w_im_; }
  Parameter& bias_re() { return *b_re_; }
  Parameter& bias_im() { return *b_im_; }

  // sum_e weights[b,e] * (W_e (X[b,v] * H[b,e]) + bias_e) as a (B x V x Fo) spectrum.
  // Experts flagged in `probe` (B x E) are evaluated for the weight gradient
  // only; they never change the output or receive parameter gradients.
  CVar mixture(Tape& tape, CVar spectrum, Var responses, Var weights, const Tensor* probe = nullptr) const;

 private:
  std::size_t experts_, bins_in_, bins_out_;
  Parameter* w_re_;
  Parameter* w_im_;
  Parameter* b_re_;
  Parameter* b_im_;
};

// Output of one expert on a (B x V x F) sub-band, as a (B x horizon x V)
// forecast: irfft to `horizon` steps scaled by horizon / lookback.
Tensor expert_forward(const ExpertBank& bank, std::size_t expert, const ComplexTensor& subband,
                      std::size_t lookback, std::size_t horizon);

// ---------------------------------------------------------------------------
// Model

struct ModelConfig {
  std::size_t lookback = 96;
  std::size_t horizon = 96;
  std::size_t vars = 7;
  std::size_t e_max = 7;
  std::size_t depth = 1;
  std::size_t feature_dim = 16;
  GateMode gate = GateMode::Dual;
  std::size_t fixed_k = 2;
  filterbank::FilterMode filter_mode = filterbank::FilterMode::Dog;
  double sigma0 = 0.0;
  double alpha = 1.0;
  double sigma_min = 0.5;
  double sigma_max = 0.0;
};

// Values recorded for one block during a forward pass.
struct BlockTrace {
  CVar spectrum;
  Var mu, e, chi;
  Var probs;
  Var k_hat;
  std::vector<std::size_t> k;
  Var weights;
  Var responses;
};

class AdaMoGe {
 public:
  AdaMoGe(const ModelConfig& config, std::uint64_t seed);
  AdaMoGe(const AdaMoGe&) = delete;
  AdaMoGe& operator=(const AdaMoGe&) = delete;

  const ModelConfig& config() const noexcept { return config_; }
  ParameterStore& parameters() noexcept { return store_; }
  const ParameterStore& parameters() const noexcept { return store_; }
  std::size_t parameter_count() const { return store_.trainable_scalars(); }
  std::size_t blocks() const noexcept { return blocks_.size(); }

  const filterbank::FilterBank& bank(std::size_t block) const { return blocks_.at(block).bank; }
  const Gate& gate(std::size_t block) const { return blocks_.at(block).gate; }
  const ExpertBank& experts(std::size_t block) const { return blocks_.at(block).experts; }

  // (B x L x V) normalized windows -> (B x H x V) forecasts.
  Var forward(Tape& tape, Var windows, std::vector<BlockTrace>* trace = nullptr) const;
  Tensor predict(const Tensor& windows) const;

  // Names of parameters that only influence the output through the rounded K.
  std::vector<std::string> count_head_parameters() const;

 private:
  struct Block {
    filterbank::FilterBank bank;
    Gate gate;
    ExpertBank experts;
    std::size_t out_len;
    Parameter* ffn_w1 = nullptr;
    Parameter* ffn_b1 = nullptr;
    Parameter* ffn_w2 = nullptr;
    Parameter* ffn_b2 = nullptr;
  };

  Var block_forward(Tape& tape, const Block& block, Var input, BlockTrace* trace) const;

  ModelConfig config_;
  ParameterStore store_;
  std::vector<Block> blocks_;
};

// Distance of one forward pass from the points where the output is not
// differentiable: k_hat at a rounding half-integer, equal probabilities at
// the top-K cut, and the raw bandwidth at a clamp bound. Infinite when a kind
// of boundary does not occur.
struct DecisionMargins {
  double k_round = std::numeric_limits<double>::infinity();
  double topk_gap = std::numeric_limits<double>::infinity();
  double sigma_clamp = std::numeric_limits<double>::infinity();

  double min() const { return std::min({k_round, topk_gap, sigma_clamp}); }
};

DecisionMargins decision_margins(const AdaMoGe& model, const Tensor& windows);

}  // namespace adamoge::moge
