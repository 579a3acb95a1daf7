#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace adamoge::fft {

using cplx = std::complex<double>;

// Complex DFT plan for one length. Mixed radix for lengths whose prime
// factors are small, Bluestein's chirp-z for lengths with a large prime factor.
// Forward is unnormalized with exp(-2*pi*i*k*t/n); inverse is unnormalized with
// the opposite sign. Plans are immutable after construction and safe to share.
class FftPlan {
 public:
  explicit FftPlan(std::size_t n);

  std::size_t size() const noexcept { return n_; }
  void forward(std::span<const cplx> in, std::span<cplx> out) const;
  void inverse(std::span<const cplx> in, std::span<cplx> out) const;

 private:
  void transform(std::span<const cplx> in, std::span<cplx> out, bool inverse) const;
  void mixed_radix(const cplx* in, std::size_t stride, cplx* out, std::size_t n,
                   std::size_t factor_index, bool inverse) const;
  void bluestein(std::span<const cplx> in, std::span<cplx> out, bool inverse) const;

  std::size_t n_;
  std::vector<std::size_t> factors_;
  std::vector<cplx> twiddles_;  // exp(-2*pi*i*j/n), j < n

  // Bluestein state
  bool use_bluestein_ = false;
  std::vector<cplx> chirp_;        // exp(-pi*i*k^2/n)
  std::vector<cplx> chirp_fft_;    // FFT of the conjugate chirp filter, length m
  std::shared_ptr<const FftPlan> conv_plan_;
};

// Shared plan for length n. Thread-safe.
std::shared_ptr<const FftPlan> plan_for(std::size_t n);

inline std::size_t half_bins(std::size_t length) { return length / 2 + 1; }

// Half-spectrum of a real sequence: bins 0..floor(L/2). Requires L >= 2.
std::vector<cplx> rfft(std::span<const double> x);
void rfft(std::span<const double> x, std::span<cplx> out);

// Real sequence of length L from its half-spectrum, with the 1/L factor.
// Imaginary parts of the DC and (for even L) Nyquist bins are ignored.
std::vector<double> irfft(std::span<const cplx> spectrum, std::size_t length);
void irfft(std::span<const cplx> spectrum, std::span<double> out);

}  // namespace adamoge::fft
