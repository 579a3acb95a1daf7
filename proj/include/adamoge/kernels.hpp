#pragma once

#include <cstddef>
#include <span>

// Batched numeric kernels used by the differentiable ops. Each kernel has an
// OpenMP version here and a plain serial version in kernels::serial that the
// tests compare against. Parallel loops only ever split independent output
// slices; every reduction runs in a fixed order inside one thread, so results
// do not depend on the thread count.
namespace adamoge::kernels {

// Number of threads the parallel kernels use; 0 restores the OpenMP default.
void set_num_threads(int threads);
int num_threads();

// Row-wise real FFT: x is (rows x length), re/im are (rows x length/2+1).
void rfft_rows(std::span<const double> x, std::size_t rows, std::size_t length,
               std::span<double> re, std::span<double> im);
// Adjoint of rfft_rows: accumulates into gx.
void rfft_rows_adjoint(std::span<const double> gre, std::span<const double> gim,
                       std::size_t rows, std::size_t length, std::span<double> gx);

// Row-wise inverse real FFT with 1/length normalization.
void irfft_rows(std::span<const double> re, std::span<const double> im, std::size_t rows,
                std::size_t length, std::span<double> out);
// Adjoint of irfft_rows: accumulates into gre/gim.
void irfft_rows_adjoint(std::span<const double> g, std::size_t rows, std::size_t length,
                        std::span<double> gre, std::span<double> gim);

// y (n x out) = x (n x in) * W^T + b
void linear_forward(std::span<const double> x, std::span<const double> w,
                    std::span<const double> b, std::size_t n, std::size_t in, std::size_t out,
                    std::span<double> y);
// Accumulating backward; any gradient span may be empty to skip it.
void linear_backward(std::span<const double> x, std::span<const double> w,
                     std::span<const double> gy, std::size_t n, std::size_t in, std::size_t out,
                     std::span<double> gx, std::span<double> gw, std::span<double> gb);

struct MixtureDims {
  std::size_t batch;
  std::size_t vars;
  std::size_t experts;
  std::size_t bins_in;
  std::size_t bins_out;
};

// Filtered complex expert mixture:
//   out[b,v,:] = sum_{e : weight[b,e] != 0} weight[b,e] * (W_e (X[b,v,:] * H[b,e,:]) + bias_e)
// X is (B,V,F) split complex, H is (B,E,F) real, weight (B,E), W (E,Fo,F) and
// bias (E,Fo) complex. Experts with zero weight are skipped entirely unless
// probe (B,E, optional) is nonzero for the pair: a probed expert is evaluated
// but not mixed in, so the weight gradient at zero weight is exact.
// expert_re/expert_im, when non-empty, receive the unweighted expert outputs
// (B,E,V,Fo) for active or probed (b,e) pairs; the backward pass reuses them.
struct MixtureInputs {
  std::span<const double> x_re, x_im;
  std::span<const double> response;
  std::span<const double> weight;
  std::span<const double> w_re, w_im;
  std::span<const double> bias_re, bias_im;
  std::span<const double> probe = {};

  bool evaluated(std::size_t i) const { return weight[i] != 0.0 || (!probe.empty() && probe[i] != 0.0); }
};

// Real and imaginary parts are requested together: give both or neither.
struct MixtureGrads {
  std::span<double> x_re, x_im;        // may be empty
  std::span<double> response;          // may be empty
  std::span<double> weight;            // may be empty
  std::span<double> w_re, w_im;        // may be empty
  std::span<double> bias_re, bias_im;  // may be empty
};

void mixture_forward(const MixtureDims& dims, const MixtureInputs& in, std::span<double> out_re,
                     std::span<double> out_im, std::span<double> expert_re,
                     std::span<double> expert_im);
void mixture_backward(const MixtureDims& dims, const MixtureInputs& in,
                      std::span<const double> expert_re, std::span<const double> expert_im,
                      std::span<const double> g_re, std::span<const double> g_im,
                      const MixtureGrads& grads);

namespace serial {

void rfft_rows(std::span<const double> x, std::size_t rows, std::size_t length,
               std::span<double> re, std::span<double> im);
void rfft_rows_adjoint(std::span<const double> gre, std::span<const double> gim,
                       std::size_t rows, std::size_t length, std::span<double> gx);
void irfft_rows(std::span<const double> re, std::span<const double> im, std::size_t rows,
                std::size_t length, std::span<double> out);
void irfft_rows_adjoint(std::span<const double> g, std::size_t rows, std::size_t length,
                        std::span<double> gre, std::span<double> gim);
void linear_forward(std::span<const double> x, std::span<const double> w,
                    std::span<const double> b, std::size_t n, std::size_t in, std::size_t out,
                    std::span<double> y);
void linear_backward(std::span<const double> x, std::span<const double> w,
                     std::span<const double> gy, std::size_t n, std::size_t in, std::size_t out,
                     std::span<double> gx, std::span<double> gw, std::span<double> gb);
void mixture_forward(const MixtureDims& dims, const MixtureInputs& in, std::span<double> out_re,
                     std::span<double> out_im);
void mixture_backward(const MixtureDims& dims, const MixtureInputs& in,
                      std::span<const double> g_re, std::span<const double> g_im,
                      const MixtureGrads& grads);

}  // namespace serial
}  // namespace adamoge::kernels
