// Reference vs parallel kernels at the shapes a 128x128 training tile sees
// with base_channels 8, plus one full generator pass per backend.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "seamstain/kernels.hpp"
#include "seamstain/netarch.hpp"

namespace {

using namespace seamstain;

Tensor<float> random_tensor(int c, int h, int w, unsigned seed) {
  Tensor<float> t(1, c, h, w);
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> u(-1.f, 1.f);
  for (float& v : t.values()) v = u(rng);
  return t;
}

std::vector<float> random_vector(std::size_t n, unsigned seed) {
  std::vector<float> v(n);
  std::mt19937 rng(seed);
  std::normal_distribution<float> g(0.f, 0.02f);
  for (float& x : v) x = g(rng);
  return v;
}

struct ConvCase {
  ConvGeometry geom;
  int size;
};

// Indexed by the first benchmark argument.
const ConvCase kConvCases[] = {
    {{3, 8, 7, 1, 3, Padding::reflect}, 128},   // generator stem
    {{8, 16, 3, 2, 1, Padding::reflect}, 128},  // first downsampling
    {{32, 32, 3, 1, 1, Padding::reflect}, 32},  // residual conv
    {{8, 3, 7, 1, 3, Padding::reflect}, 128},   // generator head
    {{16, 32, 4, 2, 1, Padding::zero}, 32},     // discriminator
};

template <Backend B>
void BM_Conv2dForward(benchmark::State& state) {
  const ConvCase& c = kConvCases[state.range(0)];
  const auto x = random_tensor(c.geom.in_channels, c.size, c.size, 1);
  const auto w = random_vector(c.geom.weight_count(), 2);
  const std::vector<float> b;
  for (auto _ : state) {
    auto y = B == Backend::parallel ? kernels::parallel::conv2d_forward<float>(c.geom, x, w, b)
                                    : kernels::reference::conv2d_forward<float>(c.geom, x, w, b);
    benchmark::DoNotOptimize(y.data());
  }
}

template <Backend B>
void BM_Conv2dBackward(benchmark::State& state) {
  const ConvCase& c = kConvCases[state.range(0)];
  const auto x = random_tensor(c.geom.in_channels, c.size, c.size, 1);
  const auto w = random_vector(c.geom.weight_count(), 2);
  const int out = c.geom.out_size(c.size);
  const auto dy = random_tensor(c.geom.out_channels, out, out, 3);
  std::vector<float> dw(w.size());
  Tensor<float> dx;
  for (auto _ : state) {
    if constexpr (B == Backend::parallel) {
      kernels::parallel::conv2d_backward<float>(c.geom, x, w, dy, &dx, dw, {});
    } else {
      kernels::reference::conv2d_backward<float>(c.geom, x, w, dy, &dx, dw, {});
    }
    benchmark::DoNotOptimize(dx.data());
  }
}

template <Backend B>
void BM_ConvTransposeForward(benchmark::State& state) {
  const ConvTransposeGeometry g{static_cast<int>(state.range(0)), static_cast<int>(state.range(0)) / 2, 3, 2, 1, 1};
  const int size = static_cast<int>(state.range(1));
  const auto x = random_tensor(g.in_channels, size, size, 4);
  const auto w = random_vector(g.weight_count(), 5);
  for (auto _ : state) {
    auto y = B == Backend::parallel ? kernels::parallel::conv_transpose2d_forward<float>(g, x, w, {})
                                    : kernels::reference::conv_transpose2d_forward<float>(g, x, w, {});
    benchmark::DoNotOptimize(y.data());
  }
}

template <Backend B>
void BM_InstanceNorm(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  const int size = static_cast<int>(state.range(1));
  const auto x = random_tensor(c, size, size, 6);
  const std::vector<float> gain(c, 1.f), bias(c, 0.f);
  for (auto _ : state) {
    auto y = B == Backend::parallel ? kernels::parallel::instance_norm_forward<float>(x, gain, bias, 1e-5)
                                    : kernels::reference::instance_norm_forward<float>(x, gain, bias, 1e-5);
    benchmark::DoNotOptimize(y.data());
  }
}

template <Backend B>
void BM_GeneratorForward(benchmark::State& state) {
  GeneratorConfig cfg;
  cfg.base_channels = 8;
  Generator<float> g(cfg, 7);
  g.network().set_backend(B);
  const auto x = random_tensor(3, 128, 128, 8);
  for (auto _ : state) {
    auto y = g.forward(x);
    benchmark::DoNotOptimize(y.data());
  }
}

#define SEAMSTAIN_BOTH(fn, ...)                                      \
  BENCHMARK(fn<Backend::reference>)->__VA_ARGS__->Unit(benchmark::kMillisecond); \
  BENCHMARK(fn<Backend::parallel>)->__VA_ARGS__->Unit(benchmark::kMillisecond)

SEAMSTAIN_BOTH(BM_Conv2dForward, DenseRange(0, 4));
SEAMSTAIN_BOTH(BM_Conv2dBackward, DenseRange(0, 4));
SEAMSTAIN_BOTH(BM_ConvTransposeForward, Args({32, 32})->Args({16, 64}));
SEAMSTAIN_BOTH(BM_InstanceNorm, Args({8, 128})->Args({32, 32}));
SEAMSTAIN_BOTH(BM_GeneratorForward, Iterations(3));

}  // namespace

BENCHMARK_MAIN();
