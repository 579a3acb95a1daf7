#include "adamoge/fft.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace adamoge::fft {

namespace {

// Prime factors above this go through Bluestein rather than an O(p^2) butterfly.
constexpr std::size_t kMaxDirectRadix = 31;

std::vector<std::size_t> factorize(std::size_t n) {
  std::vector<std::size_t> f;
  while (n % 4 == 0) {
    f.push_back(4);
    n /= 4;
  }
  for (std::size_t p = 2; p * p <= n; ++p) {
    while (n % p == 0) {
      f.push_back(p);
      n /= p;
    }
  }
  if (n > 1) f.push_back(n);
  return f;
}

cplx unit_root(std::size_t num, std::size_t den, double sign) {
  const double angle = sign * 2.0 * std::numbers::pi * static_cast<double>(num) /
                       static_cast<double>(den);
  return {std::cos(angle), std::sin(angle)};
}

}  // namespace

FftPlan::FftPlan(std::size_t n) : n_(n) {
  if (n == 0) throw std::invalid_argument("FFT length must be positive");
  factors_ = factorize(n);
  for (auto p : factors_) {
    if (p > kMaxDirectRadix) use_bluestein_ = true;
  }

  if (!use_bluestein_) {
    twiddles_.resize(n);
    for (std::size_t j = 0; j < n; ++j) twiddles_[j] = unit_root(j, n, -1.0);
    return;
  }

  std::size_t m = 1;
  while (m < 2 * n - 1) m <<= 1;
  conv_plan_ = plan_for(m);
  chirp_.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    // k^2 mod 2n keeps the angle argument small and exact.
    const std::size_t k2 = (k * k) % (2 * n);
    chirp_[k] = unit_root(k2, 2 * n, -1.0);
  }
  std::vector<cplx> filter(m, cplx{});
  filter[0] = std::conj(chirp_[0]);
  for (std::size_t k = 1; k < n; ++k) {
    filter[k] = std::conj(chirp_[k]);
    filter[m - k] = std::conj(chirp_[k]);
  }
  chirp_fft_.resize(m);
  conv_plan_->forward(filter, chirp_fft_);
}

void FftPlan::forward(std::span<const cplx> in, std::span<cplx> out) const {
  transform(in, out, false);
}

void FftPlan::inverse(std::span<const cplx> in, std::span<cplx> out) const {
  transform(in, out, true);
}

void FftPlan::transform(std::span<const cplx> in, std::span<cplx> out, bool inverse) const {
  if (in.size() != n_ || out.size() != n_) {
    throw std::invalid_argument("FFT buffer length does not match plan length " +
                                std::to_string(n_));
  }
  if (use_bluestein_) {
    bluestein(in, out, inverse);
  } else if (in.data() == out.data()) {
    std::vector<cplx> tmp(in.begin(), in.end());
    mixed_radix(tmp.data(), 1, out.data(), n_, 0, inverse);
  } else {
    mixed_radix(in.data(), 1, out.data(), n_, 0, inverse);
  }
}

// Recursive decimation in time. The sub-transform of length n uses the twiddle
// table with stride n_/n.
void FftPlan::mixed_radix(const cplx* in, std::size_t stride, cplx* out, std::size_t n,
                          std::size_t factor_index, bool inverse) const {
  if (n == 1) {
    out[0] = in[0];
    return;
  }
  const std::size_t p = factors_[factor_index];
  const std::size_t m = n / p;
  for (std::size_t q = 0; q < p; ++q) {
    mixed_radix(in + q * stride, stride * p, out + q * m, m, factor_index + 1, inverse);
  }

  const std::size_t tw_stride = n_ / n;
  auto twiddle = [&](std::size_t j) {
    const cplx w = twiddles_[(j % n) * tw_stride];
    return inverse ? std::conj(w) : w;
  };

  if (p == 2) {
    for (std::size_t k = 0; k < m; ++k) {
      const cplx a = out[k];
      const cplx b = out[m + k] * twiddle(k);
      out[k] = a + b;
      out[m + k] = a - b;
    }
    return;
  }
  if (p == 4) {
    const cplx rot = inverse ? cplx{0.0, 1.0} : cplx{0.0, -1.0};
    for (std::size_t k = 0; k < m; ++k) {
      const cplx a0 = out[k];
      const cplx a1 = out[m + k] * twiddle(k);
      const cplx a2 = out[2 * m + k] * twiddle(2 * k);
      const cplx a3 = out[3 * m + k] * twiddle(3 * k);
      const cplx s02 = a0 + a2, d02 = a0 - a2;
      const cplx s13 = a1 + a3, d13 = (a1 - a3) * rot;
      out[k] = s02 + s13;
      out[m + k] = d02 + d13;
      out[2 * m + k] = s02 - s13;
      out[3 * m + k] = d02 - d13;
    }
    return;
  }

  // Generic radix-p butterfly.
  std::vector<cplx> scratch(p);
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t q = 0; q < p; ++q) scratch[q] = out[q * m + k] * twiddle(q * k);
    for (std::size_t s = 0; s < p; ++s) {
      cplx acc = scratch[0];
      for (std::size_t q = 1; q < p; ++q) acc += scratch[q] * twiddle(q * s * m);
      out[s * m + k] = acc;
    }
  }
}

void FftPlan::bluestein(std::span<const cplx> in, std::span<cplx> out, bool inverse) const {
  const std::size_t m = chirp_fft_.size();
  auto chirp = [&](std::size_t k) { return inverse ? std::conj(chirp_[k]) : chirp_[k]; };

  std::vector<cplx> a(m, cplx{});
  for (std::size_t k = 0; k < n_; ++k) a[k] = in[k] * chirp(k);
  std::vector<cplx> fa(m);
  conv_plan_->forward(a, fa);
  for (std::size_t j = 0; j < m; ++j) {
    // The inverse transform uses the conjugate filter, whose FFT is the
    // index-reversed conjugate of the forward filter's FFT.
    fa[j] *= inverse ? std::conj(chirp_fft_[(m - j) % m]) : chirp_fft_[j];
  }
  conv_plan_->inverse(fa, a);
  const double scale = 1.0 / static_cast<double>(m);
  for (std::size_t k = 0; k < n_; ++k) out[k] = a[k] * scale * chirp(k);
}

std::shared_ptr<const FftPlan> plan_for(std::size_t n) {
  static std::mutex mutex;
  static std::map<std::size_t, std::shared_ptr<const FftPlan>> cache;
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find(n); it != cache.end()) return it->second;
  }
  // Built outside the lock: Bluestein plans recurse into plan_for.
  auto plan = std::make_shared<const FftPlan>(n);
  std::lock_guard lock(mutex);
  return cache.emplace(n, std::move(plan)).first->second;
}

void rfft(std::span<const double> x, std::span<cplx> out) {
  const std::size_t n = x.size();
  if (n < 2) throw std::invalid_argument("rfft needs at least 2 samples, got " + std::to_string(n));
  if (out.size() != half_bins(n)) throw std::invalid_argument("rfft output must hold floor(L/2)+1 bins");
  const auto plan = plan_for(n);
  std::vector<cplx> buf(x.begin(), x.end());
  std::vector<cplx> spec(n);
  plan->forward(buf, spec);
  std::copy_n(spec.begin(), out.size(), out.begin());
  out[0].imag(0.0);
  if (n % 2 == 0) out[n / 2].imag(0.0);
}

std::vector<cplx> rfft(std::span<const double> x) {
  if (x.size() < 2) throw std::invalid_argument("rfft needs at least 2 samples, got " + std::to_string(x.size()));
  std::vector<cplx> out(half_bins(x.size()));
  rfft(x, out);
  return out;
}

void irfft(std::span<const cplx> spectrum, std::span<double> out) {
  const std::size_t n = out.size();
  if (n < 1 || spectrum.size() != half_bins(n)) {
    throw std::invalid_argument("irfft: " + std::to_string(spectrum.size()) +
                                " bins inconsistent with output length " + std::to_string(n));
  }
  std::vector<cplx> full(n);
  full[0] = {spectrum[0].real(), 0.0};
  for (std::size_t k = 1; k < spectrum.size(); ++k) {
    full[k] = spectrum[k];
    full[n - k] = std::conj(spectrum[k]);
  }
  if (n % 2 == 0) full[n / 2] = {spectrum[n / 2].real(), 0.0};
  std::vector<cplx> time(n);
  plan_for(n)->inverse(full, time);
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t t = 0; t < n; ++t) out[t] = time[t].real() * scale;
}

std::vector<double> irfft(std::span<const cplx> spectrum, std::size_t length) {
  std::vector<double> out(length);
  irfft(spectrum, out);
  return out;
}

}  // namespace adamoge::fft
