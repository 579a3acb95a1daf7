#include "adamoge/kernels.hpp"

#include <omp.h>

#include <complex>
#include <vector>

#include "adamoge/fft.hpp"

namespace adamoge::kernels {

namespace {

using fft::cplx;

// Tiny loops are not worth a parallel region.
constexpr std::size_t kMinParallelRows = 8;

}  // namespace

void set_num_threads(int threads) {
  omp_set_num_threads(threads > 0 ? threads : omp_get_num_procs());
}

int num_threads() { return omp_get_max_threads(); }

void rfft_rows(std::span<const double> x, std::size_t rows, std::size_t length,
               std::span<double> re, std::span<double> im) {
  const std::size_t bins = fft::half_bins(length);
  const auto plan = fft::plan_for(length);
#pragma omp parallel if (rows >= kMinParallelRows)
  {
    std::vector<cplx> buf(length), spec(length);
#pragma omp for schedule(static)
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t t = 0; t < length; ++t) buf[t] = {x[r * length + t], 0.0};
      plan->forward(buf, spec);
      for (std::size_t k = 0; k < bins; ++k) {
        re[r * bins + k] = spec[k].real();
        im[r * bins + k] = spec[k].imag();
      }
      im[r * bins] = 0.0;
      if (length % 2 == 0) im[r * bins + length / 2] = 0.0;
    }
  }
}

// gx[t] += Re(sum_k g_k exp(+2 pi i k t / L)), the transpose of the forward map.
void rfft_rows_adjoint(std::span<const double> gre, std::span<const double> gim,
                       std::size_t rows, std::size_t length, std::span<double> gx) {
  const std::size_t bins = fft::half_bins(length);
  const auto plan = fft::plan_for(length);
#pragma omp parallel if (rows >= kMinParallelRows)
  {
    std::vector<cplx> buf(length), time(length);
#pragma omp for schedule(static)
    for (std::size_t r = 0; r < rows; ++r) {
      std::fill(buf.begin(), buf.end(), cplx{});
      for (std::size_t k = 0; k < bins; ++k) buf[k] = {gre[r * bins + k], gim[r * bins + k]};
      // bin 0 and the even-length Nyquist bin are forced real in the forward pass
      buf[0].imag(0.0);
      if (length % 2 == 0) buf[length / 2].imag(0.0);
      plan->inverse(buf, time);
      for (std::size_t t = 0; t < length; ++t) gx[r * length + t] += time[t].real();
    }
  }
}

void irfft_rows(std::span<const double> re, std::span<const double> im, std::size_t rows,
                std::size_t length, std::span<double> out) {
  const std::size_t bins = fft::half_bins(length);
  const auto plan = fft::plan_for(length);
  const double scale = 1.0 / static_cast<double>(length);
#pragma omp parallel if (rows >= kMinParallelRows)
  {
    std::vector<cplx> full(length), time(length);
#pragma omp for schedule(static)
    for (std::size_t r = 0; r < rows; ++r) {
      const double* pr = re.data() + r * bins;
      const double* pi = im.data() + r * bins;
      full[0] = {pr[0], 0.0};
      for (std::size_t k = 1; k < bins; ++k) {
        full[k] = {pr[k], pi[k]};
        full[length - k] = {pr[k], -pi[k]};
      }
      if (length % 2 == 0) full[length / 2] = {pr[length / 2], 0.0};
      plan->inverse(full, time);
      for (std::size_t t = 0; t < length; ++t) out[r * length + t] = time[t].real() * scale;
    }
  }
}

// d/dX_k of irfft is (c_k / L) * rfft(g)_k with c_k = 2 except at DC and Nyquist.
void irfft_rows_adjoint(std::span<const double> g, std::size_t rows, std::size_t length,
                        std::span<double> gre, std::span<double> gim) {
  const std::size_t bins = fft::half_bins(length);
  const auto plan = fft::plan_for(length);
  const double inv = 1.0 / static_cast<double>(length);
#pragma omp parallel if (rows >= kMinParallelRows)
  {
    std::vector<cplx> buf(length), spec(length);
#pragma omp for schedule(static)
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t t = 0; t < length; ++t) buf[t] = {g[r * length + t], 0.0};
      plan->forward(buf, spec);
      for (std::size_t k = 0; k < bins; ++k) {
        const bool edge = (k == 0) || (length % 2 == 0 && k == length / 2);
        const double c = edge ? inv : 2.0 * inv;
        gre[r * bins + k] += c * spec[k].real();
        if (!edge) gim[r * bins + k] += c * spec[k].imag();
      }
    }
  }
}

void linear_forward(std::span<const double> x, std::span<const double> w,
                    std::span<const double> b, std::size_t n, std::size_t in, std::size_t out,
                    std::span<double> y) {
#pragma omp parallel for schedule(static) if (n >= kMinParallelRows)
  for (std::size_t r = 0; r < n; ++r) {
    const double* xr = x.data() + r * in;
    for (std::size_t o = 0; o < out; ++o) {
      const double* wo = w.data() + o * in;
      double acc = b.empty() ? 0.0 : b[o];
      for (std::size_t i = 0; i < in; ++i) acc += wo[i] * xr[i];
      y[r * out + o] = acc;
    }
  }
}

void linear_backward(std::span<const double> x, std::span<const double> w,
                     std::span<const double> gy, std::size_t n, std::size_t in, std::size_t out,
                     std::span<double> gx, std::span<double> gw, std::span<double> gb) {
  if (!gx.empty()) {
#pragma omp parallel for schedule(static) if (n >= kMinParallelRows)
    for (std::size_t r = 0; r < n; ++r) {
      double* gxr = gx.data() + r * in;
      for (std::size_t o = 0; o < out; ++o) {
        const double g = gy[r * out + o];
        if (g == 0.0) continue;
        const double* wo = w.data() + o * in;
        for (std::size_t i = 0; i < in; ++i) gxr[i] += g * wo[i];
      }
    }
  }
  if (!gw.empty() || !gb.empty()) {
#pragma omp parallel for schedule(static) if (out >= kMinParallelRows)
    for (std::size_t o = 0; o < out; ++o) {
      double bias_acc = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        const double g = gy[r * out + o];
        bias_acc += g;
        if (gw.empty() || g == 0.0) continue;
        const double* xr = x.data() + r * in;
        double* gwo = gw.data() + o * in;
        for (std::size_t i = 0; i < in; ++i) gwo[i] += g * xr[i];
      }
      if (!gb.empty()) gb[o] += bias_acc;
    }
  }
}

void mixture_forward(const MixtureDims& d, const MixtureInputs& in, std::span<double> out_re,
                     std::span<double> out_im, std::span<double> expert_re,
                     std::span<double> expert_im) {
  const std::size_t V = d.vars, E = d.experts, F = d.bins_in, Fo = d.bins_out;
  const bool keep = !expert_re.empty();
#pragma omp parallel if (d.batch >= 2)
  {
    std::vector<double> sr(F), si(F);
#pragma omp for schedule(static)
    for (std::size_t b = 0; b < d.batch; ++b) {
      double* orow_re = out_re.data() + b * V * Fo;
      double* orow_im = out_im.data() + b * V * Fo;
      std::fill(orow_re, orow_re + V * Fo, 0.0);
      std::fill(orow_im, orow_im + V * Fo, 0.0);
      for (std::size_t e = 0; e < E; ++e) {
        const double weight = in.weight[b * E + e];
        if (!in.evaluated(b * E + e)) continue;
        const double* h = in.response.data() + (b * E + e) * F;
        const double* wr = in.w_re.data() + e * Fo * F;
        const double* wi = in.w_im.data() + e * Fo * F;
        for (std::size_t v = 0; v < V; ++v) {
          const double* xr = in.x_re.data() + (b * V + v) * F;
          const double* xi = in.x_im.data() + (b * V + v) * F;
          for (std::size_t f = 0; f < F; ++f) {
            sr[f] = xr[f] * h[f];
            si[f] = xi[f] * h[f];
          }
          for (std::size_t o = 0; o < Fo; ++o) {
            const double* wro = wr + o * F;
            const double* wio = wi + o * F;
            double yr = in.bias_re[e * Fo + o];
            double yi = in.bias_im[e * Fo + o];
            for (std::size_t f = 0; f < F; ++f) {
              yr += wro[f] * sr[f] - wio[f] * si[f];
              yi += wro[f] * si[f] + wio[f] * sr[f];
            }
            if (keep) {
              const std::size_t idx = ((b * E + e) * V + v) * Fo + o;
              expert_re[idx] = yr;
              expert_im[idx] = yi;
            }
            if (weight == 0.0) continue;
            orow_re[v * Fo + o] += weight * yr;
            orow_im[v * Fo + o] += weight * yi;
          }
        }
      }
    }
  }
}

void mixture_backward(const MixtureDims& d, const MixtureInputs& in,
                      std::span<const double> expert_re, std::span<const double> expert_im,
                      std::span<const double> g_re, std::span<const double> g_im,
                      const MixtureGrads& grads) {
  const std::size_t V = d.vars, E = d.experts, F = d.bins_in, Fo = d.bins_out;
  const bool want_x = !grads.x_re.empty();
  const bool want_h = !grads.response.empty();
  const bool want_s = want_x || want_h;

  // Per-sample quantities: weight, response and input gradients.
#pragma omp parallel if (d.batch >= 2)
  {
    std::vector<double> gsr(F), gsi(F);
#pragma omp for schedule(static)
    for (std::size_t b = 0; b < d.batch; ++b) {
      for (std::size_t e = 0; e < E; ++e) {
        const double weight = in.weight[b * E + e];
        if (!in.evaluated(b * E + e)) continue;
        if (!grads.weight.empty()) {
          double acc = 0.0;
          for (std::size_t v = 0; v < V; ++v) {
            for (std::size_t o = 0; o < Fo; ++o) {
              const std::size_t idx = ((b * E + e) * V + v) * Fo + o;
              acc += g_re[(b * V + v) * Fo + o] * expert_re[idx] +
                     g_im[(b * V + v) * Fo + o] * expert_im[idx];
            }
          }
          grads.weight[b * E + e] += acc;
        }
        if (!want_s || weight == 0.0) continue;
        const double* h = in.response.data() + (b * E + e) * F;
        const double* wr = in.w_re.data() + e * Fo * F;
        const double* wi = in.w_im.data() + e * Fo * F;
        double* gh = want_h ? grads.response.data() + (b * E + e) * F : nullptr;
        for (std::size_t v = 0; v < V; ++v) {
          std::fill(gsr.begin(), gsr.end(), 0.0);
          std::fill(gsi.begin(), gsi.end(), 0.0);
          for (std::size_t o = 0; o < Fo; ++o) {
            const double gyr = weight * g_re[(b * V + v) * Fo + o];
            const double gyi = weight * g_im[(b * V + v) * Fo + o];
            const double* wro = wr + o * F;
            const double* wio = wi + o * F;
            for (std::size_t f = 0; f < F; ++f) {
              gsr[f] += wro[f] * gyr + wio[f] * gyi;
              gsi[f] += wro[f] * gyi - wio[f] * gyr;
            }
          }
          const double* xr = in.x_re.data() + (b * V + v) * F;
          const double* xi = in.x_im.data() + (b * V + v) * F;
          for (std::size_t f = 0; f < F; ++f) {
            if (gh) gh[f] += gsr[f] * xr[f] + gsi[f] * xi[f];
            if (want_x) {
              grads.x_re[(b * V + v) * F + f] += gsr[f] * h[f];
              grads.x_im[(b * V + v) * F + f] += gsi[f] * h[f];
            }
          }
        }
      }
    }
  }

  if (grads.w_re.empty() && grads.bias_re.empty()) return;

  // Expert weights: one output row per task, summed over the batch in order.
#pragma omp parallel if (E * Fo >= kMinParallelRows)
  {
    std::vector<double> sr(F), si(F);
#pragma omp for schedule(static)
    for (std::size_t row = 0; row < E * Fo; ++row) {
      const std::size_t e = row / Fo;
      const std::size_t o = row % Fo;
      double* gwr = grads.w_re.empty() ? nullptr : grads.w_re.data() + row * F;
      double* gwi = grads.w_im.empty() ? nullptr : grads.w_im.data() + row * F;
      double gbr = 0.0, gbi = 0.0;
      for (std::size_t b = 0; b < d.batch; ++b) {
        const double weight = in.weight[b * E + e];
        if (weight == 0.0) continue;
        const double* h = in.response.data() + (b * E + e) * F;
        for (std::size_t v = 0; v < V; ++v) {
          const double gyr = weight * g_re[(b * V + v) * Fo + o];
          const double gyi = weight * g_im[(b * V + v) * Fo + o];
          gbr += gyr;
          gbi += gyi;
          if (!gwr) continue;
          const double* xr = in.x_re.data() + (b * V + v) * F;
          const double* xi = in.x_im.data() + (b * V + v) * F;
          for (std::size_t f = 0; f < F; ++f) {
            const double s_re = xr[f] * h[f];
            const double s_im = xi[f] * h[f];
            gwr[f] += gyr * s_re + gyi * s_im;
            gwi[f] += gyi * s_re - gyr * s_im;
          }
        }
      }
      if (!grads.bias_re.empty()) {
        grads.bias_re[row] += gbr;
        grads.bias_im[row] += gbi;
      }
    }
  }
}

}  // namespace adamoge::kernels
