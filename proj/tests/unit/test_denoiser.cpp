#include <doctest.h>

#include <cmath>
#include <limits>

#include "fddm/denoiser.hpp"
#include "fddm/error.hpp"
#include "fddm/image_ops.hpp"
#include "fddm/nn/convert.hpp"
#include "fddm/sampler.hpp"
#include "helpers.hpp"

using namespace fddm;
using nn::Shape;
using nn::Tensor;
using nn::Var;

namespace {

// eps = w0 * noisy + w1 * boundary: two trainable scalars.
class ToyNetwork final : public DenoiserNetwork {
 public:
  ToyNetwork(double w0, double w1) {
    Tensor w(Shape{1, 2, 1, 1});
    w.data = {static_cast<float>(w0), static_cast<float>(w1)};
    weight_ = params_.add("w", std::move(w));
  }
  Var forward(const Var& input, std::span<const int>) override {
    return nn::conv2d(input, weight_, nullptr, 1, 0);
  }
  nn::ParamSet& params() override { return params_; }
  std::string architecture() const override { return "toy"; }
  Var weight_;

 private:
  nn::ParamSet params_;
};

std::vector<Image2D> phantom_like(int count, int n, std::uint64_t seed) {
  std::vector<Image2D> out;
  for (int i = 0; i < count; ++i) {
    Image2D img = test::random_image(n, n, seed + i, -0.2, 0.2);
    for (int y = n / 4; y < 3 * n / 4; ++y) {
      for (int x = n / 4; x < 3 * n / 4; ++x) img.at(x, y) += 0.6;
    }
    out.push_back(std::move(img));
  }
  return out;
}

std::vector<Image2D> boundaries_of(const std::vector<Image2D>& imgs) {
  std::vector<Image2D> out;
  for (const auto& i : imgs) out.push_back(sobel_boundary(i));
  return out;
}

// Loss of the toy network recomputed in double from the public draws.
double toy_loss(double w0, double w1, const std::vector<Image2D>& clean,
                const std::vector<Image2D>& bnd, const AlphaSchedule& s, std::uint64_t seed) {
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    const TrainingDraw d = draw_training_sample(clean[i], bnd[i], s, NoiseKind::blue, derive_seed(seed, i));
    for (std::size_t k = 0; k < d.noisy.size(); ++k) {
      const double r = w0 * d.noisy[k] + w1 * d.boundary_t[k] - d.noise[k];
      total += r * r;
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

}  // namespace

TEST_CASE("unet output matches input dims and is deterministic") {
  UNetDenoiser net(UNetOptions{8, 4, 1});
  for (int n : {16, 32, 64}) {
    NetworkPredictor pred(net, 1000);
    const ConditionedInput in{test::random_image(n, n, n), sobel_boundary(test::random_image(n, n, n + 1)), 17};
    const Image2D a = pred.predict(in);
    CHECK(a.width() == n);
    CHECK(a.height() == n);
    CHECK(pred.predict(in) == a);
  }
  NetworkPredictor pred(net, 1000);
  CHECK_THROWS_AS(pred.predict(ConditionedInput{Image2D(16, 16), Image2D(16, 16), 0}), Error);
  CHECK_THROWS_AS(pred.predict(ConditionedInput{Image2D(18, 18), Image2D(18, 18), 5}), Error);
  CHECK_THROWS_AS(UNetDenoiser(UNetOptions{6, 4, 0}), Error);
}

TEST_CASE("a zero-initialised head predicts zero, so the initial loss is E[z^2] = 1") {
  UNetDenoiser net(UNetOptions{8, 4, 2});
  const AlphaSchedule s = make_schedule(1000);
  const auto clean = phantom_like(4, 16, 10);
  const auto bnd = boundaries_of(clean);
  double total = 0.0;
  for (std::uint64_t b = 0; b < 100; ++b) {
    nn::NoGradGuard guard;
    total += nn::scalar_value(denoiser_loss(net, clean, bnd, s, NoiseKind::blue, b));
  }
  CHECK(total / 100 == doctest::Approx(1.0).epsilon(0.2));
}

TEST_CASE("an oracle network has zero loss") {
  // Recovers the drawn noise exactly from the noisy input and the clean image.
  class Oracle final : public DenoiserNetwork {
   public:
    Oracle(const Image2D& clean, const AlphaSchedule& s) : clean_(clean), s_(s) {}
    Var forward(const Var& input, std::span<const int> steps) override {
      Tensor out(Shape{input->shape().n, 1, input->shape().h, input->shape().w});
      for (int n = 0; n < input->shape().n; ++n) {
        const Image2D noisy = nn::load_image(input->value, n, 0);
        const double a = s_.alpha_bar(steps[n]);
        const Image2D eps = (1.0 / std::sqrt(1.0 - a)) * (noisy - std::sqrt(a) * clean_);
        nn::store_image(out, n, 0, eps);
      }
      return nn::constant(std::move(out));
    }
    nn::ParamSet& params() override { return params_; }
    std::string architecture() const override { return "oracle"; }

   private:
    Image2D clean_;
    AlphaSchedule s_;
    nn::ParamSet params_;
  };
  const AlphaSchedule s = make_schedule(1000);
  const auto clean = phantom_like(1, 16, 3);
  Oracle net(clean[0], s);
  CHECK(nn::scalar_value(denoiser_loss(net, clean, boundaries_of(clean), s, NoiseKind::blue, 9)) < 1e-10);
}

TEST_CASE("toy gradient matches central differences") {
  const AlphaSchedule s = make_schedule(1000);
  const auto clean = phantom_like(8, 16, 20);
  const auto bnd = boundaries_of(clean);
  const double w0 = 0.3, w1 = -0.2;
  ToyNetwork net(w0, w1);
  Var loss = denoiser_loss(net, clean, bnd, s, NoiseKind::blue, 31);
  CHECK(nn::scalar_value(loss) == doctest::Approx(toy_loss(w0, w1, clean, bnd, s, 31)).epsilon(1e-5));
  nn::backward(loss);
  const double h = 1e-4;
  const double g0 = (toy_loss(w0 + h, w1, clean, bnd, s, 31) - toy_loss(w0 - h, w1, clean, bnd, s, 31)) / (2 * h);
  const double g1 = (toy_loss(w0, w1 + h, clean, bnd, s, 31) - toy_loss(w0, w1 - h, clean, bnd, s, 31)) / (2 * h);
  CHECK(std::abs(net.weight_->grad.data[0] - g0) <= 1e-4 * std::abs(g0));
  CHECK(std::abs(net.weight_->grad.data[1] - g1) <= 1e-4 * std::abs(g1));
}

TEST_CASE("training draws use the step-dependent boundary threshold") {
  const AlphaSchedule s = make_schedule(100);
  const auto clean = phantom_like(1, 16, 40);
  const Image2D b = sobel_boundary(clean[0]);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const TrainingDraw d = draw_training_sample(clean[0], b, s, NoiseKind::blue, seed);
    CHECK(d.t >= 1);
    CHECK(d.t <= 100);
    CHECK(d.boundary_t == threshold_boundary(b, d.t, 100));
    CHECK(max_abs_diff(d.noisy, forward_diffuse(clean[0], d.t, s, d.noise)) == 0.0);
    const TrainingDraw again = draw_training_sample(clean[0], b, s, NoiseKind::blue, seed);
    CHECK(again.noise == d.noise);
  }
}

TEST_CASE("training step reduces the toy loss and tracks an ema") {
  const AlphaSchedule s = make_schedule(1000);
  const auto clean = phantom_like(8, 16, 50);
  const auto bnd = boundaries_of(clean);
  ToyNetwork net(0.0, 0.0);
  DenoiserTrainer trainer(net, s, DenoiserTrainOptions{0.01, 0.5, NoiseKind::blue});
  const double before = toy_loss(0.0, 0.0, clean, bnd, s, 1000);
  for (int k = 0; k < 100; ++k) trainer.training_step(clean, bnd, static_cast<std::uint64_t>(k));
  const float w0 = net.weight_->value.data[0];
  CHECK(toy_loss(w0, net.weight_->value.data[1], clean, bnd, s, 1000) < before);
  CHECK(trainer.steps_taken() == 100);
  CHECK(trainer.ema().shadow()[0].data[0] != 0.0f);
}

TEST_CASE("a non-finite loss is reported") {
  const AlphaSchedule s = make_schedule(1000);
  const auto clean = phantom_like(2, 16, 60);
  ToyNetwork net(std::numeric_limits<double>::quiet_NaN(), 0.0);
  DenoiserTrainer trainer(net, s, DenoiserTrainOptions{});
  try {
    trainer.training_step(clean, boundaries_of(clean), 1);
    FAIL("expected NanLoss");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NanLoss);
  }
}

TEST_CASE("step embedding") {
  const std::vector<int> steps = {0, 5};
  const Tensor e = step_embedding(steps, 8);
  CHECK(e.shape == Shape{2, 8, 1, 1});
  CHECK(e.data[0] == 0.0f);
  CHECK(e.data[4] == 1.0f);
  CHECK(e.data[8] == doctest::Approx(std::sin(5.0)));
  CHECK(e.data[13] == doctest::Approx(std::cos(5.0 * std::exp(-std::log(10000.0) / 4))));
  CHECK_THROWS_AS(step_embedding(steps, 7), Error);
}

TEST_CASE("ema weights are substituted and restored") {
  UNetDenoiser net(UNetOptions{8, 4, 3});
  std::vector<Tensor> zeros;
  for (const auto& [name, p] : net.params().entries()) zeros.emplace_back(p->value.shape);
  const auto before = net.params().entries()[0].second->value.data;
  NetworkPredictor pred(net, 1000, &zeros);
  const Image2D out = pred.predict(ConditionedInput{test::random_image(16, 16, 1), Image2D(16, 16), 3});
  for (double v : out.pixels()) CHECK(v == 0.0);
  CHECK(net.params().entries()[0].second->value.data == before);
  CHECK(zeros[0].data[0] == 0.0f);
}
