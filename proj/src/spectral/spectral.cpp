#include "adamoge/spectral.hpp"

#include <stdexcept>

#include "adamoge/fft.hpp"
#include "adamoge/ops.hpp"

namespace adamoge::spectral {

SpectrumBatch::SpectrumBatch(ComplexTensor values, std::size_t lookback)
    : values_(std::move(values)), lookback_(lookback) {
  if (values_.shape().size() != 3) throw std::invalid_argument("spectrum batch must be (B x V x F)");
  if (values_.shape()[2] != fft::half_bins(lookback)) {
    throw std::invalid_argument("spectrum has " + std::to_string(values_.shape()[2]) +
                                " bins, lookback " + std::to_string(lookback) + " needs " +
                                std::to_string(fft::half_bins(lookback)));
  }
}

SpectrumBatch SpectrumBatch::from_windows(const Tensor& windows) {
  if (windows.rank() != 3) throw std::invalid_argument("windows must be (B x L x V)");
  Tape tape;
  const CVar s = ad::spectrum(tape.constant(windows));
  return SpectrumBatch(ComplexTensor(s.re.value(), s.im.value()), windows.dim(1));
}

namespace {

ad::Summary summary_of(Tape& tape, const SpectrumBatch& spec) {
  const CVar s{tape.constant(spec.values().re), tape.constant(spec.values().im)};
  return ad::summarize(s);
}

}  // namespace

Tensor cross_variable_response(const SpectrumBatch& spec) {
  Tape tape;
  return summary_of(tape, spec).mu.value();
}

Tensor spectral_intensity(const SpectrumBatch& spec) {
  Tape tape;
  return summary_of(tape, spec).e.value();
}

Tensor gate_features(const Tensor& mu, const Tensor& e) {
  Tape tape;
  return ops::concat_cols(tape.constant(mu), tape.constant(e)).value();
}

SpectralSummary summarize(const SpectrumBatch& spec) {
  Tape tape;
  const auto s = summary_of(tape, spec);
  return {s.mu.value(), s.e.value(), s.chi.value()};
}

namespace ad {

CVar spectrum(Var windows) { return ops::rfft(ops::swap_last_axes(windows)); }

Summary summarize(CVar spectrum) {
  Summary s;
  s.magnitude = ops::magnitude(spectrum);
  s.mu = ops::mean_axis(s.magnitude, 1);
  s.e = ops::mean_axis(s.magnitude, 2);
  s.chi = ops::concat_cols(s.mu, s.e);
  return s;
}

}  // namespace ad
}  // namespace adamoge::spectral
