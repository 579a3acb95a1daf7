#include <benchmark/benchmark.h>

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

struct MixtureCase {
  k::MixtureDims dims{32, 7, 7, 49, 49};
  std::vector<double> x_re, x_im, h, w, w_re, w_im, b_re, b_im, out_re, out_im, cache_re, cache_im;

  MixtureCase() {
    const auto& d = dims;
    x_re = random_vec(d.batch * d.vars * d.bins_in, 1);
    x_im = random_vec(d.batch * d.vars * d.bins_in, 2);
    h = random_vec(d.batch * d.experts * d.bins_in, 3);
    w.assign(d.batch * d.experts, 0.0);
    for (std::size_t b = 0; b < d.batch; ++b) {
      w[b * d.experts + b % d.experts] = 0.6;
      w[b * d.experts + (b + 3) % d.experts] = 0.4;
    }
    w_re = random_vec(d.experts * d.bins_out * d.bins_in, 4);
    w_im = random_vec(d.experts * d.bins_out * d.bins_in, 5);
    b_re = random_vec(d.experts * d.bins_out, 6);
    b_im = random_vec(d.experts * d.bins_out, 7);
    out_re.resize(d.batch * d.vars * d.bins_out);
    out_im.resize(out_re.size());
    cache_re.resize(d.batch * d.experts * d.vars * d.bins_out);
    cache_im.resize(cache_re.size());
  }

  k::MixtureInputs inputs() const { return {x_re, x_im, h, w, w_re, w_im, b_re, b_im}; }
};

void BM_MixtureForwardParallel(benchmark::State& state) {
  MixtureCase c;
  for (auto _ : state) {
    k::mixture_forward(c.dims, c.inputs(), c.out_re, c.out_im, c.cache_re, c.cache_im);
    benchmark::DoNotOptimize(c.out_re.data());
  }
}
BENCHMARK(BM_MixtureForwardParallel);

void BM_MixtureForwardSerial(benchmark::State& state) {
  MixtureCase c;
  for (auto _ : state) {
    k::serial::mixture_forward(c.dims, c.inputs(), c.out_re, c.out_im);
    benchmark::DoNotOptimize(c.out_re.data());
  }
}
BENCHMARK(BM_MixtureForwardSerial);

void BM_RfftRowsParallel(benchmark::State& state) {
  const std::size_t rows = 32 * 7, L = static_cast<std::size_t>(state.range(0));
  const auto x = random_vec(rows * L, 8);
  std::vector<double> re(rows * (L / 2 + 1)), im(re.size());
  for (auto _ : state) {
    k::rfft_rows(x, rows, L, re, im);
    benchmark::DoNotOptimize(re.data());
  }
}
BENCHMARK(BM_RfftRowsParallel)->Arg(96)->Arg(97)->Arg(128);

void BM_RfftRowsSerial(benchmark::State& state) {
  const std::size_t rows = 32 * 7, L = static_cast<std::size_t>(state.range(0));
  const auto x = random_vec(rows * L, 8);
  std::vector<double> re(rows * (L / 2 + 1)), im(re.size());
  for (auto _ : state) {
    k::serial::rfft_rows(x, rows, L, re, im);
    benchmark::DoNotOptimize(re.data());
  }
}
BENCHMARK(BM_RfftRowsSerial)->Arg(96)->Arg(97)->Arg(128);

void BM_LinearParallel(benchmark::State& state) {
  const std::size_t n = 32 * 96, in = 7, out = 32;
  const auto x = random_vec(n * in, 9), w = random_vec(out * in, 10), b = random_vec(out, 11);
  std::vector<double> y(n * out);
  for (auto _ : state) {
    k::linear_forward(x, w, b, n, in, out, y);
    benchmark::DoNotOptimize(y.data());
  }
}
BENCHMARK(BM_LinearParallel);

void BM_LinearSerial(benchmark::State& state) {
  const std::size_t n = 32 * 96, in = 7, out = 32;
  const auto x = random_vec(n * in, 9), w = random_vec(out * in, 10), b = random_vec(out, 11);
  std::vector<double> y(n * out);
  for (auto _ : state) {
    k::serial::linear_forward(x, w, b, n, in, out, y);
    benchmark::DoNotOptimize(y.data());
  }
}
BENCHMARK(BM_LinearSerial);

}  // namespace

BENCHMARK_MAIN();
