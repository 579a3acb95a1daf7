#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "adamoge/errors.hpp"
#include "adamoge/filterbank.hpp"
#include "adamoge/grad_check.hpp"
#include "adamoge/ops.hpp"
#include "adamoge/training.hpp"

using namespace adamoge;
using filterbank::BankConfig;
using filterbank::FilterBank;
using filterbank::FilterMode;
using spectral::SpectrumBatch;

namespace {

BankConfig config(std::size_t e_max, std::size_t bins, FilterMode mode = FilterMode::Dog) {
  BankConfig c;
  c.e_max = e_max;
  c.bins = bins;
  c.mode = mode;
  return c;
}

SpectrumBatch random_spectrum(std::size_t B, std::size_t V, std::size_t L, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, scale);
  Tensor w({B, L, V});
  for (auto& x : w.storage()) x = g(rng);
  return SpectrumBatch::from_windows(w);
}

void set_cutoffs(ParameterStore& store, std::size_t e, double f1, double f2, double nyq) {
  const auto [a, b] = filterbank::cutoff_parameters(f1, f2, nyq);
  store.at("filter.a").value[e] = a;
  store.at("filter.b").value[e] = b;
}

}  // namespace

TEST(FilterMode, ParseNames) {
  EXPECT_EQ(filterbank::parse_mode("dog"), FilterMode::Dog);
  EXPECT_EQ(filterbank::parse_mode("abs-dog"), FilterMode::AbsDog);
  EXPECT_EQ(filterbank::parse_mode("hard"), FilterMode::Hard);
  EXPECT_THROW(filterbank::parse_mode("gauss"), ConfigError);
}

TEST(Response, ZeroAtMidpoint) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 48.0);
  for (int i = 0; i < 1000; ++i) {
    double f1 = u(rng), f2 = u(rng);
    if (f1 > f2) std::swap(f1, f2);
    const filterbank::Cutoffs c{f1, f2};
    EXPECT_EQ(filterbank::dog_response(c.center(), f1, f2, 0.1 + u(rng)), 0.0);
  }
}

TEST(Response, FarSeparatedCenters) {
  const double sigma = 1.5, f1 = 3.0, f2 = f1 + 10 * sigma;
  EXPECT_NEAR(filterbank::dog_response(f1, f1, f2, sigma), 1.0 - std::exp(-50.0), 1e-15);
}

TEST(Response, FrozenValue) {
  // exp(-1/8) - exp(-9/8), evaluated independently.
  EXPECT_NEAR(filterbank::dog_response(5.0, 4.0, 8.0, 2.0), 0.5578444352262457, 1e-14);
}

TEST(Response, RejectsNonPositiveSigma) {
  ParameterStore s;
  FilterBank bank(s, "", config(3, 9));
  EXPECT_THROW(bank.response(0, 0.0), std::invalid_argument);
  EXPECT_THROW(bank.response(0, -1.0), std::invalid_argument);
}

TEST(Response, AbsModeIsMagnitude) {
  ParameterStore s1, s2;
  FilterBank dog(s1, "", config(3, 17));
  FilterBank abs(s2, "", config(3, 17, FilterMode::AbsDog));
  const auto h = dog.response(1, 1.7);
  const auto ha = abs.response(1, 1.7);
  for (std::size_t f = 0; f < h.size(); ++f) EXPECT_EQ(ha[f], std::abs(h[f]));
}

TEST(AdaptiveSigma, UnitSpectrum) {
  ParameterStore s;
  BankConfig c = config(1, 9);
  c.sigma0 = 1.0;
  c.sigma_min = 0.1;
  FilterBank bank(s, "", c);
  set_cutoffs(s, 0, 1.0, 3.0, 8.0);  // D0 = 2
  ComplexTensor X(Shape{2, 3, 9});
  X.re.fill(1.0);
  const auto sig = bank.adaptive_sigma(0, SpectrumBatch(X, 16));
  EXPECT_NEAR(sig[0], 0.5, 1e-12);
  EXPECT_NEAR(sig[1], 0.5, 1e-12);
}

TEST(AdaptiveSigma, ZeroSpectrumClampsToMinimum) {
  ParameterStore s;
  FilterBank bank(s, "", config(4, 9));
  for (std::size_t e = 0; e < 4; ++e) {
    EXPECT_EQ(bank.adaptive_sigma(e, SpectrumBatch(ComplexTensor(Shape{1, 2, 9}), 16))[0], bank.sigma_min());
  }
}

TEST(AdaptiveSigma, InverselyProportionalToCenter) {
  ParameterStore s;
  BankConfig c = config(2, 33);
  c.sigma0 = 1.0;
  c.sigma_min = 1e-6;
  c.sigma_max = 1e6;
  FilterBank bank(s, "", c);
  set_cutoffs(s, 0, 2.0, 6.0, 32.0);   // D0 = 4
  set_cutoffs(s, 1, 4.0, 12.0, 32.0);  // D0 = 8
  const auto spec = random_spectrum(3, 2, 64, 4);
  const auto s0 = bank.adaptive_sigma(0, spec), s1 = bank.adaptive_sigma(1, spec);
  for (std::size_t b = 0; b < 3; ++b) EXPECT_NEAR(s1[b], 0.5 * s0[b], 1e-12 * s0[b]);
}

TEST(Apply, MatchesPerBinOracle) {
  ParameterStore s;
  FilterBank bank(s, "", config(3, 9));
  const auto spec = random_spectrum(2, 2, 16, 5);
  const auto sub = bank.apply(spec);
  ASSERT_EQ(sub.shape(), (Shape{3, 2, 2, 9}));
  for (std::size_t e = 0; e < 3; ++e)
    for (std::size_t b = 0; b < 2; ++b) {
      const double sigma = bank.adaptive_sigma(e, spec)[b];
      const auto h = bank.response(e, sigma);
      for (std::size_t v = 0; v < 2; ++v)
        for (std::size_t f = 0; f < 9; ++f) {
          const std::size_t o = ((e * 2 + b) * 2 + v) * 9 + f;
          EXPECT_NEAR(sub.re[o], spec.values().re.at(b, v, f) * h[f], 1e-12);
          EXPECT_NEAR(sub.im[o], spec.values().im.at(b, v, f) * h[f], 1e-12);
        }
    }
}

TEST(Apply, HardBandsPartitionTheSpectrum) {
  // Rectangular masks sum to one, so the sub-bands add back to the input.
  ParameterStore s;
  FilterBank bank(s, "", config(7, 49, FilterMode::Hard));
  EXPECT_FALSE(bank.learnable());
  EXPECT_EQ(s.size(), 0u);
  const auto spec = random_spectrum(2, 3, 96, 6);
  const auto sub = bank.apply(spec);
  for (std::size_t i = 0; i < spec.values().size(); ++i) {
    double re = 0.0;
    for (std::size_t e = 0; e < 7; ++e) re += sub.re[e * spec.values().size() + i];
    EXPECT_EQ(re, spec.values().re[i]);
  }
}

TEST(Apply, RejectsBinMismatch) {
  ParameterStore s;
  FilterBank bank(s, "", config(3, 9));
  EXPECT_THROW(bank.apply(random_spectrum(1, 1, 20, 7)), std::invalid_argument);
}

TEST(InitBank, TwoFiltersSplitTheBand) {
  ParameterStore s;
  FilterBank bank(s, "", config(2, 49));
  const auto c = bank.cutoffs();
  EXPECT_NEAR(c[0].f1, 0.0, 0.25);
  EXPECT_NEAR(c[0].f2, 24.0, 1e-9);
  EXPECT_NEAR(c[1].f1, 24.0, 1e-9);
  EXPECT_NEAR(c[1].f2, 48.0, 0.25);
}

TEST(InitBank, SingleFilterSpansBand) {
  ParameterStore s;
  FilterBank bank(s, "", config(1, 49));
  const auto c = bank.cutoffs();
  EXPECT_GT(c[0].f1, 0.0);
  EXPECT_NEAR(c[0].f1, 0.0, 0.5);
  EXPECT_NEAR(c[0].f2, 48.0, 0.5);
}

TEST(InitBank, EightFiltersSixBinsWide) {
  ParameterStore s;
  FilterBank bank(s, "", config(8, 49));
  const auto c = bank.cutoffs();
  for (std::size_t e = 1; e + 1 < 8; ++e) {
    EXPECT_NEAR(c[e].f2 - c[e].f1, 6.0, 1e-9);
    EXPECT_NEAR(c[e].f1, 6.0 * e, 1e-9);
  }
}

TEST(FilterProperty, BoundedResponse) {
  ParameterStore s;
  FilterBank bank(s, "", config(5, 49));
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g(0.0, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    for (auto& p : s) for (auto& v : p.value.storage()) v = g(rng);
    for (std::size_t e = 0; e < 5; ++e)
      for (double h : bank.response(e, 0.5 + std::abs(g(rng)))) ASSERT_LE(std::abs(h), 1.0);
  }
}

TEST(FilterProperty, VanishesFarFromBothCenters) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const double f1 = 48.0 * u(rng), f2 = f1 + (48.0 - f1) * u(rng), sigma = 0.5 + 5.0 * u(rng);
    for (int f = 0; f < 200; ++f) {
      const double x = f;
      if (std::abs(x - f1) >= 6 * sigma && std::abs(x - f2) >= 6 * sigma) {
        ASSERT_LT(std::abs(filterbank::dog_response(x, f1, f2, sigma)), 2e-8);
      }
    }
  }
}

TEST(FilterProperty, SigmaWithinClamp) {
  ParameterStore s;
  FilterBank bank(s, "", config(6, 49));
  std::mt19937_64 rng(10);
  std::normal_distribution<double> g(0.0, 4.0);
  for (int trial = 0; trial < 100; ++trial) {
    for (auto& p : s) for (auto& v : p.value.storage()) v = g(rng);
    const auto spec = random_spectrum(2, 3, 96, 100 + trial, std::exp(g(rng)));
    for (std::size_t e = 0; e < 6; ++e)
      for (double sg : bank.adaptive_sigma(e, spec)) {
        ASSERT_GE(sg, bank.sigma_min());
        ASSERT_LE(sg, bank.sigma_max());
      }
  }
}

TEST(FilterProperty, CutoffsStayOrderedUnderTraining) {
  ParameterStore s;
  FilterBank bank(s, "", config(4, 17));
  training::Adam adam(s);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  Tensor target({1, 4, 17});
  for (auto& v : target.storage()) v = g(rng);
  const auto spec = random_spectrum(1, 2, 32, 12);
  for (int step = 0; step < 100; ++step) {
    Tape t;
    const Var r = bank.responses(t, CVar{t.constant(spec.values().re), t.constant(spec.values().im)});
    t.backward(ops::mean_squared_error(r, target));
    adam.step(0.1);
    for (const auto& c : bank.cutoffs()) {
      ASSERT_GT(c.f1, 0.0);
      ASSERT_LT(c.f1, c.f2);
      ASSERT_LE(c.f2, bank.nyquist());
    }
  }
}

TEST(FilterProperty, GradCheckIncludingSpectrumPath) {
  for (FilterMode mode : {FilterMode::Dog, FilterMode::AbsDog}) {
    ParameterStore s;
    BankConfig c = config(3, 9, mode);
    c.alpha = 0.25;
    c.sigma_max = 100.0;
    c.sigma_min = 0.01;
    FilterBank bank(s, "", c);
    const auto spec = random_spectrum(2, 2, 16, 13);
    s.add("x.re", spec.values().re);
    s.add("x.im", spec.values().im);
    std::mt19937_64 rng(14);
    std::normal_distribution<double> g;
    Tensor proj({2, 3, 9});
    for (auto& v : proj.storage()) v = g(rng);

    // The test point must sit away from the clamp bounds.
    for (std::size_t e = 0; e < 3; ++e)
      for (double sg : bank.adaptive_sigma(e, spec)) {
        ASSERT_GT(sg, c.sigma_min + 1e-3);
        ASSERT_LT(sg, c.sigma_max - 1e-3);
      }
    const auto r = grad_check(
        [&](Tape& t, ParameterStore& st) {
          const CVar x{t.parameter(st.at("x.re")), t.parameter(st.at("x.im"))};
          return ops::sum(ops::mul(bank.responses(t, x), t.constant(proj)));
        },
        s, 1e-5);
    EXPECT_LT(r.max_relative_error, 1e-4) << r.worst_parameter;
  }
}
