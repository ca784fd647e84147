#include <benchmark/benchmark.h>

#include <vector>

#include "fddm/denoiser.hpp"
#include "fddm/image_ops.hpp"
#include "fddm/metrics.hpp"
#include "fddm/nn/layers.hpp"
#include "fddm/nn/ops.hpp"
#include "fddm/noise.hpp"
#include "fddm/rng.hpp"
#include "fddm/sampler.hpp"
#include "fddm/schedule.hpp"
#include "fddm/vae.hpp"

namespace {

using namespace fddm;

Image2D random_image(int n, std::uint64_t seed) {
  Rng rng(seed);
  Image2D img(n, n);
  for (double& v : img.pixels()) v = rng.uniform(-1.0, 1.0);
  return img;
}

void BM_SobelBoundary(benchmark::State& state) {
  const Image2D img = random_image(static_cast<int>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(sobel_boundary(img));
}
BENCHMARK(BM_SobelBoundary)->Arg(32)->Arg(256);

void BM_PyramidFuse(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Image2D h = random_image(n, 1);
  const Image2D l = random_image(n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(pyramid_fuse(h, l));
}
BENCHMARK(BM_PyramidFuse)->Arg(32)->Arg(256);

void BM_BlueNoise(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sample_noise(NoiseSpec{NoiseKind::blue, n, n, seed++}));
}
BENCHMARK(BM_BlueNoise)->Arg(32)->Arg(64)->Arg(256);

void BM_RadialPsd(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Image2D img = sample_noise(NoiseSpec{NoiseKind::blue, n, n, 3});
  for (auto _ : state) benchmark::DoNotOptimize(radial_psd(img));
}
BENCHMARK(BM_RadialPsd)->Arg(64)->Arg(256);

void BM_Conv2dForwardBackward(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  Rng rng(4);
  nn::ParamSet params;
  const nn::Conv2d conv(params, "conv", c, c, 3, 1, rng);
  nn::Tensor x(nn::Shape{8, c, 32, 32});
  for (float& v : x.data) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  const nn::Var input = nn::constant(x);
  for (auto _ : state) {
    params.zero_grad();
    nn::backward(nn::half_sum_squares(conv(input)));
  }
}
BENCHMARK(BM_Conv2dForwardBackward)->Arg(16)->Arg(32);

void BM_UNetPredict(benchmark::State& state) {
  UNetDenoiser net(UNetOptions{16, 8, 5});
  NetworkPredictor predictor(net, 1000);
  const int batch = static_cast<int>(state.range(0));
  std::vector<ConditionedInput> inputs;
  for (int i = 0; i < batch; ++i) {
    const Image2D x = random_image(32, 10 + i);
    inputs.push_back(ConditionedInput{x, sobel_boundary(x), 100 + i});
  }
  for (auto _ : state) benchmark::DoNotOptimize(predictor.predict_batch(inputs));
}
BENCHMARK(BM_UNetPredict)->Arg(1)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_TranslatorStep(benchmark::State& state) {
  TranslatorOptions options;
  options.base_width = 8;
  options.latent_channels = 16;
  ConvTranslator net(options);
  TranslatorTrainer trainer(net, TranslatorTrainOptions{});
  std::vector<DualChannelInput> a, b;
  for (int i = 0; i < 4; ++i) {
    a.push_back(with_sobel_boundary(random_image(32, 20 + i)));
    b.push_back(with_sobel_boundary(random_image(32, 30 + i)));
  }
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(trainer.step(a, b, seed++));
}
BENCHMARK(BM_TranslatorStep)->Unit(benchmark::kMillisecond);

// Full reverse chain at 32x32 with a constant predictor: sampler overhead only.
class ZeroPredictor final : public NoisePredictor {
 public:
  std::vector<Image2D> predict_batch(std::span<const ConditionedInput> inputs) override {
    return std::vector<Image2D>(inputs.size(), Image2D(inputs.front().noisy.width(), inputs.front().noisy.height()));
  }
};

void BM_SamplerOverhead(benchmark::State& state) {
  const AlphaSchedule schedule = make_schedule(1000);
  const Image2D coarse = random_image(32, 40);
  const Image2D boundary = sobel_boundary(coarse);
  SamplerConfig config;
  config.horizon = static_cast<int>(state.range(0));
  ZeroPredictor predictor;
  for (auto _ : state) benchmark::DoNotOptimize(sample(predictor, coarse, boundary, config, schedule, 1));
}
BENCHMARK(BM_SamplerOverhead)->Arg(50)->Arg(300)->Unit(benchmark::kMillisecond);

void BM_Ssim(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Image2D a = random_image(n, 50);
  const Image2D b = random_image(n, 51);
  for (auto _ : state) benchmark::DoNotOptimize(ssim(a, b));
}
BENCHMARK(BM_Ssim)->Arg(32)->Arg(256);

void BM_FidProxy(benchmark::State& state) {
  std::vector<Image2D> a, b;
  for (int i = 0; i < 64; ++i) {
    a.push_back(random_image(32, 60 + i));
    b.push_back(random_image(32, 200 + i));
  }
  for (auto _ : state) benchmark::DoNotOptimize(fid_proxy(a, b, 16, 7));
}
BENCHMARK(BM_FidProxy)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
