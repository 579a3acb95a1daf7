#pragma once

#include <string>
#include <utility>
#include <vector>

#include "adamoge/parameter.hpp"
#include "adamoge/spectral.hpp"
#include "adamoge/tape.hpp"

namespace adamoge::filterbank {

enum class FilterMode {
  Dog,     // exp(-(f-f1)^2/2s^2) - exp(-(f-f2)^2/2s^2), literal
  AbsDog,  // |Dog|
  Hard,    // fixed rectangular bands, no learnable cutoffs
};

FilterMode parse_mode(const std::string& name);
std::string mode_name(FilterMode mode);

struct BankConfig {
  std::size_t e_max = 7;
  std::size_t bins = 49;
  double sigma0 = 0.0;     // <= 0 selects f_nyq / (2 e_max)
  double alpha = 1.0;
  double sigma_min = 0.5;
  double sigma_max = 0.0;  // <= 0 selects f_nyq / 2
  FilterMode mode = FilterMode::Dog;
};

// Difference-of-Gaussians response at frequency f (bin units).
double dog_response(double f, double f1, double f2, double sigma);

struct Cutoffs {
  double f1;
  double f2;
  double center() const { return 0.5 * (f1 + f2); }
};

// E_max band-pass filters over F bins. Cutoffs are parameterized as
//   f1 = f_nyq * sigmoid(a),  f2 = f1 + (f_nyq - f1) * sigmoid(b)
// so 0 < f1 < f2 <= f_nyq for any finite (a, b). The bandwidth of each filter
// is recomputed per sample from the spectrum's mean power and clamped.
class FilterBank {
 public:
  // Registers "<prefix>filter.a" / "<prefix>filter.b" (not in Hard mode) and
  // initializes the passbands to tile (0, f_nyq] in equal segments.
  FilterBank(ParameterStore& store, const std::string& prefix, BankConfig config);

  const BankConfig& config() const noexcept { return config_; }
  std::size_t e_max() const noexcept { return config_.e_max; }
  std::size_t bins() const noexcept { return config_.bins; }
  double nyquist() const noexcept { return static_cast<double>(config_.bins - 1); }
  double sigma0() const noexcept { return sigma0_; }
  double sigma_min() const noexcept { return config_.sigma_min; }
  double sigma_max() const noexcept { return sigma_max_; }
  bool learnable() const noexcept { return a_ != nullptr; }

  std::vector<Cutoffs> cutoffs() const;

  // H_e(f) for f = 0..F-1 at a given bandwidth; throws on sigma <= 0.
  std::vector<double> response(std::size_t filter, double sigma) const;

  // Clamped per-sample bandwidth of one filter, length B.
  std::vector<double> adaptive_sigma(std::size_t filter, const spectral::SpectrumBatch& spec) const;

  // (B x E x F) responses built from each sample's adaptive bandwidths.
  Tensor responses(const spectral::SpectrumBatch& spec) const;

  // (E x B x V x F) sub-bands: spectrum times each filter's response.
  ComplexTensor apply(const spectral::SpectrumBatch& spec) const;

  // Differentiable path. Returns (B x E x F) responses for the spectrum on the tape.
  Var responses(Tape& tape, CVar spectrum) const;

  // Pieces of the differentiable path, exposed for tests.
  Var cutoffs(Tape& tape) const;                       // (2 x E): f1 row, f2 row
  Var sigma(Var cutoffs, Var mean_power) const;        // (B x E), clamped
  Var response_curves(Var cutoffs, Var sigma) const;   // (B x E x F)

 private:
  Tensor hard_masks(std::size_t batch) const;

  BankConfig config_;
  double sigma0_;
  double sigma_max_;
  Parameter* a_ = nullptr;
  Parameter* b_ = nullptr;
};

// (B x V x F) complex -> (B) mean of |X|^2 over all V*F bins of each sample.
Var mean_power(CVar spectrum);

// Sigmoid parameters reproducing the given cutoffs; inverse of the bank's parameterization.
std::pair<double, double> cutoff_parameters(double f1, double f2, double nyquist);

}  // namespace adamoge::filterbank
