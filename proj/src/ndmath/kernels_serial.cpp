// Straight-line reference versions of the parallel kernels.

#include <complex>
#include <vector>

#include "adamoge/fft.hpp"
#include "adamoge/kernels.hpp"

namespace adamoge::kernels::serial {

using fft::cplx;

void rfft_rows(std::span<const double> x, std::size_t rows, std::size_t length,
               std::span<double> re, std::span<double> im) {
  const std::size_t bins = fft::half_bins(length);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto spec = fft::rfft(x.subspan(r * length, length));
    for (std::size_t k = 0; k < bins; ++k) {
      re[r * bins + k] = spec[k].real();
      im[r * bins + k] = spec[k].imag();
    }
  }
}

void rfft_rows_adjoint(std::span<const double> gre, std::span<const double> gim,
                       std::size_t rows, std::size_t length, std::span<double> gx) {
  const std::size_t bins = fft::half_bins(length);
  const auto plan = fft::plan_for(length);
  for (std::size_t r = 0; r < rows; ++r) {
    std::vector<cplx> buf(length, cplx{}), time(length);
    for (std::size_t k = 0; k < bins; ++k) buf[k] = {gre[r * bins + k], gim[r * bins + k]};
    buf[0].imag(0.0);
    if (length % 2 == 0) buf[length / 2].imag(0.0);
    plan->inverse(buf, time);
    for (std::size_t t = 0; t < length; ++t) gx[r * length + t] += time[t].real();
  }
}

void irfft_rows(std::span<const double> re, std::span<const double> im, std::size_t rows,
                std::size_t length, std::span<double> out) {
  const std::size_t bins = fft::half_bins(length);
  std::vector<cplx> spec(bins);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t k = 0; k < bins; ++k) spec[k] = {re[r * bins + k], im[r * bins + k]};
    fft::irfft(spec, out.subspan(r * length, length));
  }
}

void irfft_rows_adjoint(std::span<const double> g, std::size_t rows, std::size_t length,
                        std::span<double> gre, std::span<double> gim) {
  const std::size_t bins = fft::half_bins(length);
  const double inv = 1.0 / static_cast<double>(length);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto spec = fft::rfft(g.subspan(r * length, length));
    for (std::size_t k = 0; k < bins; ++k) {
      const bool edge = (k == 0) || (length % 2 == 0 && k == length / 2);
      gre[r * bins + k] += (edge ? 1.0 : 2.0) * inv * spec[k].real();
      if (!edge) gim[r * bins + k] += 2.0 * inv * spec[k].imag();
    }
  }
}

void linear_forward(std::span<const double> x, std::span<const double> w,
                    std::span<const double> b, std::size_t n, std::size_t in, std::size_t out,
                    std::span<double> y) {
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t o = 0; o < out; ++o) {
      double acc = b.empty() ? 0.0 : b[o];
      for (std::size_t i = 0; i < in; ++i) acc += w[o * in + i] * x[r * in + i];
      y[r * out + o] = acc;
    }
  }
}

void linear_backward(std::span<const double> x, std::span<const double> w,
                     std::span<const double> gy, std::size_t n, std::size_t in, std::size_t out,
                     std::span<double> gx, std::span<double> gw, std::span<double> gb) {
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t o = 0; o < out; ++o) {
      const double g = gy[r * out + o];
      if (!gb.empty()) gb[o] += g;
      for (std::size_t i = 0; i < in; ++i) {
        if (!gx.empty()) gx[r * in + i] += g * w[o * in + i];
        if (!gw.empty()) gw[o * in + i] += g * x[r * in + i];
      }
    }
  }
}

namespace {

// Unweighted output of expert e on sample b, variable v.
std::vector<cplx> expert_output(const MixtureDims& d, const MixtureInputs& in, std::size_t b,
                                std::size_t e, std::size_t v) {
  const std::size_t F = d.bins_in, Fo = d.bins_out;
  std::vector<cplx> y(Fo);
  for (std::size_t o = 0; o < Fo; ++o) {
    cplx acc{in.bias_re[e * Fo + o], in.bias_im[e * Fo + o]};
    for (std::size_t f = 0; f < F; ++f) {
      const std::size_t xi = (b * d.vars + v) * F + f;
      const double h = in.response[(b * d.experts + e) * F + f];
      const cplx s{in.x_re[xi] * h, in.x_im[xi] * h};
      const cplx w{in.w_re[(e * Fo + o) * F + f], in.w_im[(e * Fo + o) * F + f]};
      acc += w * s;
    }
    y[o] = acc;
  }
  return y;
}

}  // namespace

void mixture_forward(const MixtureDims& d, const MixtureInputs& in, std::span<double> out_re,
                     std::span<double> out_im) {
  const std::size_t Fo = d.bins_out;
  std::fill(out_re.begin(), out_re.end(), 0.0);
  std::fill(out_im.begin(), out_im.end(), 0.0);
  for (std::size_t b = 0; b < d.batch; ++b) {
    for (std::size_t e = 0; e < d.experts; ++e) {
      const double weight = in.weight[b * d.experts + e];
      if (weight == 0.0) continue;
      for (std::size_t v = 0; v < d.vars; ++v) {
        const auto y = expert_output(d, in, b, e, v);
        for (std::size_t o = 0; o < Fo; ++o) {
          out_re[(b * d.vars + v) * Fo + o] += weight * y[o].real();
          out_im[(b * d.vars + v) * Fo + o] += weight * y[o].imag();
        }
      }
    }
  }
}

void mixture_backward(const MixtureDims& d, const MixtureInputs& in,
                      std::span<const double> g_re, std::span<const double> g_im,
                      const MixtureGrads& grads) {
  const std::size_t F = d.bins_in, Fo = d.bins_out, E = d.experts;
  for (std::size_t b = 0; b < d.batch; ++b) {
    for (std::size_t e = 0; e < E; ++e) {
      const double weight = in.weight[b * E + e];
      if (!in.evaluated(b * E + e)) continue;
      for (std::size_t v = 0; v < d.vars; ++v) {
        const auto y = expert_output(d, in, b, e, v);
        for (std::size_t o = 0; o < Fo; ++o) {
          const cplx g{g_re[(b * d.vars + v) * Fo + o], g_im[(b * d.vars + v) * Fo + o]};
          if (!grads.weight.empty()) grads.weight[b * E + e] += g.real() * y[o].real() + g.imag() * y[o].imag();
          if (weight == 0.0) continue;
          const cplx gy = weight * g;
          if (!grads.bias_re.empty()) {
            grads.bias_re[e * Fo + o] += gy.real();
            grads.bias_im[e * Fo + o] += gy.imag();
          }
          for (std::size_t f = 0; f < F; ++f) {
            const std::size_t xi = (b * d.vars + v) * F + f;
            const std::size_t hi = (b * E + e) * F + f;
            const std::size_t wi = (e * Fo + o) * F + f;
            const double h = in.response[hi];
            const cplx x{in.x_re[xi], in.x_im[xi]};
            const cplx s = x * h;
            const cplx w{in.w_re[wi], in.w_im[wi]};
            // For y = w*s with real loss, dL/dw = gy * conj(s), dL/ds = gy * conj(w)
            // in the (re, im) gradient-pair convention.
            if (!grads.w_re.empty()) {
              const cplx gw = gy * std::conj(s);
              grads.w_re[wi] += gw.real();
              grads.w_im[wi] += gw.imag();
            }
            const cplx gs = gy * std::conj(w);
            if (!grads.response.empty()) grads.response[hi] += gs.real() * x.real() + gs.imag() * x.imag();
            if (!grads.x_re.empty()) {
              grads.x_re[xi] += gs.real() * h;
              grads.x_im[xi] += gs.imag() * h;
            }
          }
        }
      }
    }
  }
}

}  // namespace adamoge::kernels::serial
