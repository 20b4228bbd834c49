#include <benchmark/benchmark.h>

#include <memory>
#include <random>

#include "fbsd/model.hpp"
#include "fbsd/nn.hpp"
#include "fbsd/stft.hpp"
#include "fbsd/weights.hpp"

namespace {

std::vector<float> noise(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> d(-1.0f, 1.0f);
  std::vector<float> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

const fbsd::Denoiser& model() {
  static const auto m = std::make_shared<const fbsd::Denoiser>(
      fbsd::default_config(),
      std::make_shared<const fbsd::ModelWeights>(fbsd::random_init(fbsd::default_config(), 1)));
  return *m;
}

void BM_Analyze(benchmark::State& state) {
  const auto spec = fbsd::make_window_spec();
  const auto x = noise(spec.fft_size, 1);
  for (auto _ : state) benchmark::DoNotOptimize(fbsd::analyze_frame(spec, x));
}
BENCHMARK(BM_Analyze);

void BM_Synthesize(benchmark::State& state) {
  const auto spec = fbsd::make_window_spec();
  const auto frame = fbsd::analyze_frame(spec, noise(spec.fft_size, 2));
  auto ola = fbsd::OlaState::zeros(spec);
  for (auto _ : state) benchmark::DoNotOptimize(fbsd::synthesize_frame(frame, spec, ola));
}
BENCHMARK(BM_Synthesize);

// Pointwise conv at the encoder expansion shape: in -> 256 channels, F features.
void BM_Pointwise(benchmark::State& state) {
  const auto in = static_cast<std::size_t>(state.range(0));
  const auto f = static_cast<std::size_t>(state.range(1));
  const auto w = noise(256 * in, 3);
  fbsd::nn::ConvParams p{in, 256, 1, 1, 0, 0, false, false, w, {}};
  fbsd::nn::Tensor2 x(in, f);
  x.data = noise(in * f, 4);
  for (auto _ : state) benchmark::DoNotOptimize(fbsd::nn::conv1d(x, p));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(256 * in * f));
}
BENCHMARK(BM_Pointwise)->Args({32, 96})->Args({16, 48})->Args({16, 12});

void BM_Depthwise(benchmark::State& state) {
  const auto f = static_cast<std::size_t>(state.range(0));
  const auto w = noise(256 * 5, 5);
  const auto pad = fbsd::nn::same_padding(5, 2);
  fbsd::nn::ConvParams p{256, 256, 5, 2, pad.left, pad.right, true, false, w, {}};
  fbsd::nn::Tensor2 x(256, f);
  x.data = noise(256 * f, 6);
  for (auto _ : state) benchmark::DoNotOptimize(fbsd::nn::conv1d(x, p));
}
BENCHMARK(BM_Depthwise)->Arg(96)->Arg(24);

void BM_ConvTranspose(benchmark::State& state) {
  const auto f = static_cast<std::size_t>(state.range(0));
  const auto w = noise(64 * 64 * 5, 7);
  const auto pad = fbsd::nn::same_padding(5, 2);
  fbsd::nn::ConvParams p{64, 64, 5, 2, pad.left, pad.right, false, true, w, {}};
  fbsd::nn::Tensor2 x(64, f);
  x.data = noise(64 * f, 8);
  for (auto _ : state) benchmark::DoNotOptimize(fbsd::nn::conv_transpose1d(x, p));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(64 * 64 * 5 * f));
}
BENCHMARK(BM_ConvTranspose)->Arg(6)->Arg(24)->Arg(48);

void BM_Gru(benchmark::State& state) {
  const std::size_t h = 64;
  const auto wih = noise(3 * h * h, 9), whh = noise(3 * h * h, 10), b = noise(3 * h, 11);
  const fbsd::nn::GruParams p{h, h, wih, whh, b, b};
  auto s = fbsd::nn::GruState::zeros(h);
  const auto x = noise(h, 12);
  for (auto _ : state) {
    fbsd::nn::gru_step(x, p, s);
    benchmark::DoNotOptimize(s.hidden.data());
  }
}
BENCHMARK(BM_Gru);

void BM_MapIn(benchmark::State& state) {
  const auto mag = noise(1025, 13);
  for (auto _ : state) benchmark::DoNotOptimize(model().map_in(mag));
}
BENCHMARK(BM_MapIn);

void BM_StepCore(benchmark::State& state) {
  auto s = model().make_state();
  const auto mapped = noise(96, 14);
  for (auto _ : state) benchmark::DoNotOptimize(model().step_core(mapped, s));
}
BENCHMARK(BM_StepCore)->Unit(benchmark::kMicrosecond);

void BM_Step(benchmark::State& state) {
  const auto spec = fbsd::make_window_spec();
  auto s = model().make_state(&spec);
  const auto frame = fbsd::analyze_frame(spec, noise(spec.fft_size, 15));
  for (auto _ : state) benchmark::DoNotOptimize(model().step(frame, s));
  state.counters["rtf"] = benchmark::Counter(
      static_cast<double>(state.iterations()) * spec.hop / 48000.0,
      benchmark::Counter::kIsRate | benchmark::Counter::kInvert);
}
BENCHMARK(BM_Step)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
