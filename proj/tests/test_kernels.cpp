#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "adamoge/kernels.hpp"

namespace k = adamoge::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

void expect_close(const std::vector<double>& a, const std::vector<double>& b, double tol) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) ASSERT_NEAR(a[i], b[i], tol) << i;
}

class ThreadCounts : public ::testing::TestWithParam<int> {
 protected:
  void SetUp() override { k::set_num_threads(GetParam()); }
  void TearDown() override { k::set_num_threads(0); }
};

}  // namespace

TEST_P(ThreadCounts, RfftRowsMatchSerial) {
  for (std::size_t L : {2, 15, 96, 97}) {
    const std::size_t rows = 13, F = L / 2 + 1;
    const auto x = random_vec(rows * L, L);
    std::vector<double> re(rows * F), im(rows * F), sre(rows * F), sim(rows * F);
    k::rfft_rows(x, rows, L, re, im);
    k::serial::rfft_rows(x, rows, L, sre, sim);
    expect_close(re, sre, 1e-12);
    expect_close(im, sim, 1e-12);

    std::vector<double> gx(rows * L, 0.5), sgx(rows * L, 0.5);
    const auto gre = random_vec(rows * F, 1), gim = random_vec(rows * F, 2);
    k::rfft_rows_adjoint(gre, gim, rows, L, gx);
    k::serial::rfft_rows_adjoint(gre, gim, rows, L, sgx);
    expect_close(gx, sgx, 1e-12);

    std::vector<double> y(rows * L), sy(rows * L);
    k::irfft_rows(gre, gim, rows, L, y);
    k::serial::irfft_rows(gre, gim, rows, L, sy);
    expect_close(y, sy, 1e-12);

    std::vector<double> ar(rows * F, 0.1), ai(rows * F, 0.1), sar(rows * F, 0.1), sai(rows * F, 0.1);
    k::irfft_rows_adjoint(x, rows, L, ar, ai);
    k::serial::irfft_rows_adjoint(x, rows, L, sar, sai);
    expect_close(ar, sar, 1e-12);
    expect_close(ai, sai, 1e-12);
  }
}

TEST_P(ThreadCounts, LinearMatchesSerial) {
  const std::size_t n = 37, in = 11, out = 5;
  const auto x = random_vec(n * in, 1), w = random_vec(out * in, 2), b = random_vec(out, 3);
  std::vector<double> y(n * out), sy(n * out);
  k::linear_forward(x, w, b, n, in, out, y);
  k::serial::linear_forward(x, w, b, n, in, out, sy);
  expect_close(y, sy, 1e-13);

  const auto gy = random_vec(n * out, 4);
  std::vector<double> gx(n * in), gw(out * in), gb(out), sgx(n * in), sgw(out * in), sgb(out);
  k::linear_backward(x, w, gy, n, in, out, gx, gw, gb);
  k::serial::linear_backward(x, w, gy, n, in, out, sgx, sgw, sgb);
  expect_close(gx, sgx, 1e-12);
  expect_close(gw, sgw, 1e-12);
  expect_close(gb, sgb, 1e-12);
}

TEST_P(ThreadCounts, MixtureMatchesSerial) {
  const k::MixtureDims d{5, 3, 4, 9, 6};
  const auto x_re = random_vec(d.batch * d.vars * d.bins_in, 1);
  const auto x_im = random_vec(d.batch * d.vars * d.bins_in, 2);
  const auto h = random_vec(d.batch * d.experts * d.bins_in, 3);
  std::vector<double> w(d.batch * d.experts, 0.0);
  for (std::size_t b = 0; b < d.batch; ++b) {
    w[b * d.experts + b % d.experts] = 0.7;
    w[b * d.experts + (b + 1) % d.experts] = 0.3;
  }
  const auto w_re = random_vec(d.experts * d.bins_out * d.bins_in, 4);
  const auto w_im = random_vec(d.experts * d.bins_out * d.bins_in, 5);
  const auto b_re = random_vec(d.experts * d.bins_out, 6), b_im = random_vec(d.experts * d.bins_out, 7);
  const k::MixtureInputs in{x_re, x_im, h, w, w_re, w_im, b_re, b_im};

  const std::size_t out_n = d.batch * d.vars * d.bins_out;
  std::vector<double> o_re(out_n), o_im(out_n), s_re(out_n), s_im(out_n);
  std::vector<double> c_re(d.batch * d.experts * d.vars * d.bins_out), c_im(c_re.size());
  k::mixture_forward(d, in, o_re, o_im, c_re, c_im);
  k::serial::mixture_forward(d, in, s_re, s_im);
  expect_close(o_re, s_re, 1e-12);
  expect_close(o_im, s_im, 1e-12);

  const auto g_re = random_vec(out_n, 8), g_im = random_vec(out_n, 9);
  auto grads = [&](std::vector<std::vector<double>>& s) {
    s = {std::vector<double>(x_re.size()), std::vector<double>(x_im.size()), std::vector<double>(h.size()),
         std::vector<double>(w.size()),    std::vector<double>(w_re.size()), std::vector<double>(w_im.size()),
         std::vector<double>(b_re.size()), std::vector<double>(b_im.size())};
    return k::MixtureGrads{s[0], s[1], s[2], s[3], s[4], s[5], s[6], s[7]};
  };
  std::vector<std::vector<double>> pg, sg;
  k::mixture_backward(d, in, c_re, c_im, g_re, g_im, grads(pg));
  k::serial::mixture_backward(d, in, g_re, g_im, grads(sg));
  for (std::size_t i = 0; i < pg.size(); ++i) expect_close(pg[i], sg[i], 1e-11);
}

TEST(Kernels, BitIdenticalAcrossThreadCounts) {
  const k::MixtureDims d{8, 2, 3, 7, 5};
  const auto x_re = random_vec(d.batch * d.vars * d.bins_in, 1);
  const auto x_im = random_vec(d.batch * d.vars * d.bins_in, 2);
  const auto h = random_vec(d.batch * d.experts * d.bins_in, 3);
  std::vector<double> w(d.batch * d.experts, 1.0 / 3.0);
  const auto w_re = random_vec(d.experts * d.bins_out * d.bins_in, 4);
  const auto w_im = random_vec(d.experts * d.bins_out * d.bins_in, 5);
  const auto b_re = random_vec(d.experts * d.bins_out, 6), b_im = random_vec(d.experts * d.bins_out, 7);
  const k::MixtureInputs in{x_re, x_im, h, w, w_re, w_im, b_re, b_im};
  const std::size_t out_n = d.batch * d.vars * d.bins_out;
  const std::size_t cache_n = d.batch * d.experts * d.vars * d.bins_out;
  const auto g_re = random_vec(out_n, 8), g_im = random_vec(out_n, 9);

  auto run = [&](int threads) {
    k::set_num_threads(threads);
    std::vector<double> o_re(out_n), o_im(out_n), c_re(cache_n), c_im(cache_n);
    std::vector<double> gw(w_re.size()), gwi(w_re.size()), gx(x_re.size()), gxi(x_re.size());
    k::mixture_forward(d, in, o_re, o_im, c_re, c_im);
    k::MixtureGrads g;
    g.w_re = gw;
    g.w_im = gwi;
    g.x_re = gx;
    g.x_im = gxi;
    k::mixture_backward(d, in, c_re, c_im, g_re, g_im, g);
    o_re.insert(o_re.end(), gw.begin(), gw.end());
    o_re.insert(o_re.end(), gx.begin(), gx.end());
    return o_re;
  };
  const auto one = run(1);
  const auto four = run(4);
  k::set_num_threads(0);
  ASSERT_EQ(one, four);
}

TEST_P(ThreadCounts, ProbedExpertsOnlyGetWeightGradient) {
  const k::MixtureDims d{4, 2, 3, 5, 4};
  const auto x_re = random_vec(d.batch * d.vars * d.bins_in, 11);
  const auto x_im = random_vec(d.batch * d.vars * d.bins_in, 12);
  const auto h = random_vec(d.batch * d.experts * d.bins_in, 13);
  std::vector<double> w(d.batch * d.experts, 0.0), probe(w.size(), 0.0), tiny(w.size(), 0.0);
  for (std::size_t b = 0; b < d.batch; ++b) {
    w[b * d.experts + b % d.experts] = 1.0;
    probe[b * d.experts + (b + 1) % d.experts] = 1.0;
  }
  for (std::size_t i = 0; i < w.size(); ++i) tiny[i] = w[i] + probe[i] * 1e-300;
  const auto w_re = random_vec(d.experts * d.bins_out * d.bins_in, 14);
  const auto w_im = random_vec(d.experts * d.bins_out * d.bins_in, 15);
  const auto b_re = random_vec(d.experts * d.bins_out, 16), b_im = random_vec(d.experts * d.bins_out, 17);
  const k::MixtureInputs plain{x_re, x_im, h, w, w_re, w_im, b_re, b_im};
  k::MixtureInputs probed = plain;
  probed.probe = probe;
  k::MixtureInputs nudged = plain;
  nudged.weight = tiny;

  const std::size_t out_n = d.batch * d.vars * d.bins_out;
  const std::size_t cache_n = d.batch * d.experts * d.vars * d.bins_out;
  const auto g_re = random_vec(out_n, 18), g_im = random_vec(out_n, 19);
  struct Result {
    std::vector<double> o_re, o_im;
    std::vector<std::vector<double>> g;
  };
  auto run = [&](const k::MixtureInputs& in, bool serial) {
    Result r{std::vector<double>(out_n), std::vector<double>(out_n), {}};
    r.g = {std::vector<double>(x_re.size()), std::vector<double>(x_im.size()), std::vector<double>(h.size()),
           std::vector<double>(w.size()),    std::vector<double>(w_re.size()), std::vector<double>(w_im.size()),
           std::vector<double>(b_re.size()), std::vector<double>(b_im.size())};
    const k::MixtureGrads grads{r.g[0], r.g[1], r.g[2], r.g[3], r.g[4], r.g[5], r.g[6], r.g[7]};
    if (serial) {
      k::serial::mixture_forward(d, in, r.o_re, r.o_im);
      k::serial::mixture_backward(d, in, g_re, g_im, grads);
    } else {
      std::vector<double> c_re(cache_n), c_im(cache_n);
      k::mixture_forward(d, in, r.o_re, r.o_im, c_re, c_im);
      k::mixture_backward(d, in, c_re, c_im, g_re, g_im, grads);
    }
    return r;
  };
  const Result base = run(plain, false), with = run(probed, false), ser = run(probed, true), ref = run(nudged, true);
  EXPECT_EQ(with.o_re, base.o_re);
  EXPECT_EQ(with.o_im, base.o_im);
  for (std::size_t i = 0; i < 8; ++i) {
    if (i == 3) continue;
    EXPECT_EQ(with.g[i], base.g[i]) << i;
  }
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (probe[i] != 0.0) {
      EXPECT_NE(with.g[3][i], 0.0);
      EXPECT_EQ(base.g[3][i], 0.0);
    }
  }
  for (std::size_t i = 0; i < 8; ++i) expect_close(with.g[i], ser.g[i], 1e-11);
  // The weight gradient does not depend on the weight, so a vanishing weight
  // must give the probed value.
  expect_close(with.g[3], ref.g[3], 1e-11);
}

INSTANTIATE_TEST_SUITE_P(Kernels, ThreadCounts, ::testing::Values(1, 2, 4));
