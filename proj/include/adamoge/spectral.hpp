#pragma once

#include "adamoge/tape.hpp"
#include "adamoge/tensor.hpp"

namespace adamoge::spectral {

// Half-spectra of a batch of windows, (B x V x F) with F = L/2 + 1.
class SpectrumBatch {
 public:
  SpectrumBatch(ComplexTensor values, std::size_t lookback);

  // rfft of each variable of a (B x L x V) window batch.
  static SpectrumBatch from_windows(const Tensor& windows);

  const ComplexTensor& values() const noexcept { return values_; }
  std::size_t lookback() const noexcept { return lookback_; }
  std::size_t batch() const { return values_.shape()[0]; }
  std::size_t vars() const { return values_.shape()[1]; }
  std::size_t bins() const { return values_.shape()[2]; }

 private:
  ComplexTensor values_;
  std::size_t lookback_;
};

struct SpectralSummary {
  Tensor mu;   // (B x F) cross-variable averaged frequency response
  Tensor e;    // (B x V) per-variable spectral intensity
  Tensor chi;  // (B x (F+V)) = [mu ; e]
};

// mu[b,f] = mean_v |X[b,v,f]|
Tensor cross_variable_response(const SpectrumBatch& spec);
// E[b,v] = mean_f |X[b,v,f]|
Tensor spectral_intensity(const SpectrumBatch& spec);
// Row-wise concatenation [mu ; e]; throws std::invalid_argument on batch mismatch.
Tensor gate_features(const Tensor& mu, const Tensor& e);
SpectralSummary summarize(const SpectrumBatch& spec);

// Differentiable counterparts used inside the model.
namespace ad {

// (B x L x V) window -> (B x V x F) half-spectrum.
CVar spectrum(Var windows);

struct Summary {
  Var magnitude;  // (B x V x F)
  Var mu;
  Var e;
  Var chi;
};
Summary summarize(CVar spectrum);

}  // namespace ad
}  // namespace adamoge::spectral
