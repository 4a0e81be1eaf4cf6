#include <benchmark/benchmark.h>

#include <algorithm>
#include <random>

#include "crfrefine/atrous.hpp"
#include "crfrefine/densecrf.hpp"
#include "crfrefine/filtering.hpp"

using namespace crfrefine;

namespace {

// Blocky colour regions with mild noise.
Image test_image(int h, int w) {
  std::mt19937 rng(3);
  std::normal_distribution<double> noise(0.0, 4.0);
  Image im(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        const double base = 40.0 + 60.0 * ((x / 40 + y / 30 + c) % 4);
        im.at(y, x, c) = static_cast<std::uint8_t>(std::clamp(base + noise(rng), 0.0, 255.0));
      }
  return im;
}

ValueMatrix random_values(int n, int v) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  ValueMatrix m(n, v);
  for (float& x : m.values()) x = u(rng);
  return m;
}

void BM_ExactFilter(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const FeatureMatrix f = bilateral_features(test_image(side, side), 10.0f, 10.0f);
  const ValueMatrix v = random_values(f.n_points(), 4);
  for (auto _ : state) benchmark::DoNotOptimize(gaussian_filter_exact(v, f));
  state.SetItemsProcessed(state.iterations() * f.n_points());
}
BENCHMARK(BM_ExactFilter)->Arg(16)->Arg(32)->Arg(48)->Unit(benchmark::kMillisecond);

void BM_PermutohedralFilter(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const FeatureMatrix f = bilateral_features(test_image(side, side), 10.0f, 10.0f);
  const ValueMatrix v = random_values(f.n_points(), 4);
  for (auto _ : state) benchmark::DoNotOptimize(permutohedral_filter(v, f));
  state.SetItemsProcessed(state.iterations() * f.n_points());
}
BENCHMARK(BM_PermutohedralFilter)->Arg(16)->Arg(32)->Arg(48)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_LatticeApply21(benchmark::State& state) {
  const Image im = test_image(375, 500);
  const PermutohedralLattice lattice(bilateral_features(im, 60.0f, 5.0f));
  const ValueMatrix v = random_values(lattice.n_points(), 21);
  for (auto _ : state) benchmark::DoNotOptimize(lattice.apply(v, NormalizeMode::kSymmetric));
}
BENCHMARK(BM_LatticeApply21)->Unit(benchmark::kMillisecond);

void BM_Inference(benchmark::State& state) {
  const int labels = static_cast<int>(state.range(0));
  const Image im = test_image(375, 500);
  std::mt19937 rng(9);
  std::uniform_real_distribution<float> u(-2.0f, 2.0f);
  Tensor3 scores(375, 500, labels);
  for (float& x : scores.data()) x = u(rng);
  for (auto _ : state) benchmark::DoNotOptimize(inference(scores, im, KernelParams{}));
}
BENCHMARK(BM_Inference)->Arg(2)->Arg(21)->Unit(benchmark::kMillisecond);

void BM_AtrousConv(benchmark::State& state) {
  const int rate = static_cast<int>(state.range(0));
  std::mt19937 rng(1);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  Tensor3 in(64, 64, 16);
  for (float& x : in.data()) x = u(rng);
  Kernel2D k(3, 3, 16, 16);
  for (float& x : k.weights()) x = u(rng);
  for (auto _ : state) benchmark::DoNotOptimize(atrous_conv2d(in, k, rate, 1));
}
BENCHMARK(BM_AtrousConv)->Arg(1)->Arg(2)->Arg(4)->Arg(12)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
