#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>

#include "adamoge/fft.hpp"
#include "adamoge/kernels.hpp"
#include "adamoge/moge.hpp"
#include "adamoge/ops.hpp"

namespace adamoge::moge {

ExpertBank::ExpertBank(ParameterStore& store, const std::string& prefix, std::size_t experts,
                       std::size_t bins_in, std::size_t bins_out, std::mt19937_64& rng)
    : experts_(experts), bins_in_(bins_in), bins_out_(bins_out) {
  // Unit-free init: each complex weight has magnitude 1/sqrt(F) and a uniform phase.
  const double magnitude = 1.0 / std::sqrt(static_cast<double>(bins_in));
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  Tensor wr({experts, bins_out, bins_in}), wi({experts, bins_out, bins_in});
  for (std::size_t i = 0; i < wr.size(); ++i) {
    const double th = phase(rng);
    wr[i] = magnitude * std::cos(th);
    wi[i] = magnitude * std::sin(th);
  }
  w_re_ = &store.add(prefix + "experts.w_re", std::move(wr));
  w_im_ = &store.add(prefix + "experts.w_im", std::move(wi));
  b_re_ = &store.add(prefix + "experts.b_re", Tensor({experts, bins_out}));
  b_im_ = &store.add(prefix + "experts.b_im", Tensor({experts, bins_out}));
}

CVar ExpertBank::mixture(Tape& tape, CVar spectrum, Var responses, Var weights, const Tensor* probe) const {
  const Shape s = spectrum.re.shape();
  if (s.size() != 3 || s[2] != bins_in_) {
    throw std::invalid_argument("experts expect a (B x V x " + std::to_string(bins_in_) + ") spectrum, got " +
                                shape_string(s));
  }
  const kernels::MixtureDims dims{s[0], s[1], experts_, bins_in_, bins_out_};
  if (responses.shape() != Shape{dims.batch, experts_, bins_in_}) {
    throw std::invalid_argument("filter responses have shape " + shape_string(responses.shape()));
  }
  if (weights.shape() != Shape{dims.batch, experts_}) {
    throw std::invalid_argument("mixture weights have shape " + shape_string(weights.shape()));
  }

  if (probe && probe->shape() != weights.shape()) {
    throw std::invalid_argument("probe mask has shape " + shape_string(probe->shape()));
  }
  auto mask = std::make_shared<const std::vector<double>>(probe ? probe->storage() : std::vector<double>{});

  const Var wr = tape.parameter(*w_re_);
  const Var wi = tape.parameter(*w_im_);
  const Var br = tape.parameter(*b_re_);
  const Var bi = tape.parameter(*b_im_);

  auto gather = [mask](const Tape& t, std::size_t xr, std::size_t xi, std::size_t h, std::size_t w,
                       std::size_t wr, std::size_t wi, std::size_t br, std::size_t bi) {
    return kernels::MixtureInputs{t.value(xr).data(), t.value(xi).data(), t.value(h).data(),
                                  t.value(w).data(),  t.value(wr).data(), t.value(wi).data(),
                                  t.value(br).data(), t.value(bi).data(), *mask};
  };

  const std::size_t n_out = dims.batch * dims.vars * bins_out_;
  const std::size_t n_cache = dims.batch * experts_ * dims.vars * bins_out_;
  auto cache = std::make_shared<std::vector<double>>(2 * n_cache, 0.0);
  Tensor stacked({2, n_out});
  const auto in = gather(tape, spectrum.re.id, spectrum.im.id, responses.id, weights.id, wr.id, wi.id, br.id, bi.id);
  kernels::mixture_forward(dims, in, stacked.data().subspan(0, n_out), stacked.data().subspan(n_out),
                           std::span(*cache).subspan(0, n_cache), std::span(*cache).subspan(n_cache));

  const std::size_t ids[8] = {spectrum.re.id, spectrum.im.id, responses.id, weights.id,
                              wr.id,          wi.id,          br.id,        bi.id};
  Var out = tape.push(
      std::move(stacked), {spectrum.re, spectrum.im, responses, weights, wr, wi, br, bi},
      [dims, n_out, n_cache, cache, gather, ids](Tape& t, std::size_t self) {
        const auto in = gather(t, ids[0], ids[1], ids[2], ids[3], ids[4], ids[5], ids[6], ids[7]);
        auto grad_of = [&t](std::size_t id) { return t.requires_grad(id) ? t.grad(id).data() : std::span<double>{}; };
        kernels::MixtureGrads grads{grad_of(ids[0]), grad_of(ids[1]), grad_of(ids[2]), grad_of(ids[3]),
                                    grad_of(ids[4]), grad_of(ids[5]), grad_of(ids[6]), grad_of(ids[7])};
        // Both parts of a complex pair are trained together.
        if (grads.x_re.empty() != grads.x_im.empty()) grads.x_re = grads.x_im = {};
        const auto g = t.grad(self).data();
        kernels::mixture_backward(dims, in, std::span(*cache).subspan(0, n_cache),
                                  std::span(*cache).subspan(n_cache), g.subspan(0, n_out), g.subspan(n_out),
                                  grads);
      });
  return ops::split_complex(out, Shape{dims.batch, dims.vars, bins_out_});
}

Tensor expert_forward(const ExpertBank& bank, std::size_t expert, const ComplexTensor& subband,
                      std::size_t lookback, std::size_t horizon) {
  if (expert >= bank.experts()) throw std::out_of_range("expert index out of range");
  const Shape& s = subband.shape();
  if (s.size() != 3 || s[2] != bank.bins_in()) throw std::invalid_argument("sub-band bin count does not match expert");
  if (fft::half_bins(horizon) != bank.bins_out()) throw std::invalid_argument("horizon does not match expert output bins");
  const std::size_t B = s[0];
  Tape tape;
  Tensor weights({B, bank.experts()});
  for (std::size_t b = 0; b < B; ++b) weights.at(b, expert) = 1.0;
  const CVar y = bank.mixture(tape, CVar{tape.constant(subband.re), tape.constant(subband.im)},
                              tape.constant(Tensor({B, bank.experts(), bank.bins_in()}, 1.0)),
                              tape.constant(std::move(weights)));
  const double amp = static_cast<double>(horizon) / static_cast<double>(lookback);
  return ops::swap_last_axes(ops::irfft(ops::scale(y, amp), horizon)).value();
}

}  // namespace adamoge::moge
