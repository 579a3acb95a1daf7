#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "adamoge/fft.hpp"

using adamoge::fft::cplx;
namespace fft = adamoge::fft;

namespace {

// Naive O(L^2) half-spectrum, the oracle for every length.
std::vector<cplx> naive_rdft(const std::vector<double>& x) {
  const std::size_t L = x.size();
  std::vector<cplx> out(L / 2 + 1);
  for (std::size_t k = 0; k < out.size(); ++k) {
    long double re = 0, im = 0;
    for (std::size_t t = 0; t < L; ++t) {
      const long double a = -2.0L * std::numbers::pi_v<long double> * static_cast<long double>(k * t % L) / L;
      re += x[t] * std::cos(a);
      im += x[t] * std::sin(a);
    }
    out[k] = {static_cast<double>(re), static_cast<double>(im)};
  }
  return out;
}

std::vector<double> random_signal(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> x(n);
  for (auto& v : x) v = u(rng);
  return x;
}

double max_abs(const std::vector<cplx>& v) {
  double m = 0.0;
  for (auto c : v) m = std::max(m, std::abs(c));
  return m;
}

}  // namespace

TEST(Rfft, ConstantSignalIsDcOnly) {
  const auto X = fft::rfft(std::vector<double>{1, 1, 1, 1});
  ASSERT_EQ(X.size(), 3u);
  EXPECT_NEAR(X[0].real(), 4.0, 1e-15);
  EXPECT_NEAR(std::abs(X[1]), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(X[2]), 0.0, 1e-15);
  EXPECT_EQ(X[0].imag(), 0.0);
}

TEST(Rfft, AlternatingSignalIsNyquistOnly) {
  const auto X = fft::rfft(std::vector<double>{1, -1, 1, -1});
  EXPECT_NEAR(std::abs(X[0]), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(X[1]), 0.0, 1e-15);
  EXPECT_NEAR(X[2].real(), 4.0, 1e-15);
  EXPECT_EQ(X[2].imag(), 0.0);
}

TEST(Rfft, FrozenEightSampleSpectrum) {
  // Reference values from an independent FFT implementation.
  const std::vector<double> x = {0.2739233746429086, -0.4604265724722594, -0.9180529521276106, -0.9669447289429418,
                                 0.6265404784005448, 0.8255111545554434,  0.21327155153435973, 0.4589931219679968};
  const std::vector<cplx> expected = {{0.05281543, 0.0}, {-0.25362207, 3.04891011}, {1.60524525, -0.87303619},
                                      {-0.45161214, 0.78626111}, {0.33854948, 0.0}};
  const auto X = fft::rfft(x);
  for (std::size_t k = 0; k < X.size(); ++k) EXPECT_NEAR(std::abs(X[k] - expected[k]), 0.0, 1e-8) << k;
}

TEST(Rfft, MatchesNaiveDftAcrossLengths) {
  for (std::size_t L : {2, 3, 4, 5, 7, 8, 12, 16, 37, 64, 96, 97, 100, 127, 128, 192, 336, 720}) {
    const auto x = random_signal(L, L);
    const auto X = fft::rfft(x);
    const auto ref = naive_rdft(x);
    const double scale = max_abs(ref);
    for (std::size_t k = 0; k < X.size(); ++k) {
      EXPECT_LT(std::abs(X[k] - ref[k]) / scale, 1e-10) << "L=" << L << " k=" << k;
    }
    EXPECT_EQ(X[0].imag(), 0.0) << L;
    if (L % 2 == 0) EXPECT_NEAR(X[L / 2].imag(), 0.0, 1e-12 * scale) << L;
  }
}

TEST(Rfft, RejectsShortInput) {
  EXPECT_THROW(fft::rfft(std::vector<double>{1.0}), std::invalid_argument);
  EXPECT_THROW(fft::rfft(std::vector<double>{}), std::invalid_argument);
}

TEST(Irfft, DcOnlySpectrum) {
  const auto x = fft::irfft(std::vector<cplx>{4, 0, 0}, 4);
  for (double v : x) EXPECT_NEAR(v, 1.0, 1e-15);
}

TEST(Irfft, SingleCosineBin) {
  const auto x = fft::irfft(std::vector<cplx>{0, 2, 0}, 4);
  const std::vector<double> expected = {1, 0, -1, 0};
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(x[i], expected[i], 1e-15);
}

TEST(Irfft, RejectsInconsistentLength) {
  EXPECT_THROW(fft::irfft(std::vector<cplx>{1, 2}, 4), std::invalid_argument);
  EXPECT_THROW(fft::irfft(std::vector<cplx>{1, 2, 3, 4}, 4), std::invalid_argument);
}

TEST(FftProperty, RoundTripAllLengths) {
  for (std::size_t L = 2; L <= 512; ++L) {
    const auto x = random_signal(L, 1000 + L);
    const auto y = fft::irfft(fft::rfft(x), L);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < L; ++i) {
      num = std::max(num, std::abs(y[i] - x[i]));
      den = std::max(den, std::abs(x[i]));
    }
    ASSERT_LT(num / den, 1e-10) << "L=" << L;
  }
}

TEST(FftProperty, Parseval) {
  for (std::size_t L = 2; L <= 300; ++L) {
    const auto x = random_signal(L, 5000 + L);
    const auto X = fft::rfft(x);
    double time = 0.0;
    for (double v : x) time += v * v;
    double freq = std::norm(X[0]);
    for (std::size_t k = 1; k < X.size(); ++k) {
      freq += (L % 2 == 0 && k == L / 2) ? std::norm(X[k]) : 2.0 * std::norm(X[k]);
    }
    ASSERT_NEAR(freq / static_cast<double>(L), time, 1e-9 * time) << "L=" << L;
  }
}

TEST(FftProperty, Deterministic) {
  const auto x = random_signal(97, 3);
  const auto a = fft::rfft(x);
  const auto b = fft::rfft(x);
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].real(), b[k].real());
    EXPECT_EQ(a[k].imag(), b[k].imag());
  }
}

TEST(FftPlan, ComplexForwardInverse) {
  for (std::size_t n : {1, 2, 6, 31, 61, 96, 101}) {
    fft::FftPlan plan(n);
    std::vector<cplx> in(n), out(n), back(n);
    std::mt19937_64 rng(n);
    std::normal_distribution<double> g;
    for (auto& c : in) c = {g(rng), g(rng)};
    plan.forward(in, out);
    plan.inverse(out, back);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(std::abs(back[i] / static_cast<double>(n) - in[i]), 0.0, 1e-11);
  }
}
