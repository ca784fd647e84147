#include "fddm/denoiser.hpp"

#include <cmath>
#include <string>

#include "fddm/error.hpp"
#include "fddm/image_ops.hpp"
#include "fddm/nn/convert.hpp"
#include "fddm/rng.hpp"
#include "fddm/sampler.hpp"

namespace fddm {

using nn::Conv2d;
using nn::GroupNorm;
using nn::Shape;
using nn::Tensor;
using nn::Var;

Image2D NoisePredictor::predict(const ConditionedInput& input) {
  auto out = predict_batch(std::span<const ConditionedInput>(&input, 1));
  return std::move(out.front());
}

Tensor step_embedding(std::span<const int> steps, int dim) {
  if (dim <= 0 || dim % 2 != 0) {
    throw Error(ErrorKind::ConfigError, "step embedding width must be positive and even");
  }
  const int half = dim / 2;
  Tensor t(Shape{static_cast<int>(steps.size()), dim, 1, 1});
  for (std::size_t n = 0; n < steps.size(); ++n) {
    for (int i = 0; i < half; ++i) {
      const double freq = std::exp(-std::log(10000.0) * i / half);
      const double arg = steps[n] * freq;
      t.data[n * dim + i] = static_cast<float>(std::sin(arg));
      t.data[n * dim + half + i] = static_cast<float>(std::cos(arg));
    }
  }
  return t;
}

Tensor pack_inputs(std::span<const ConditionedInput> inputs) {
  if (inputs.empty()) throw Error(ErrorKind::EmptyDataset, "pack_inputs: empty batch");
  const Image2D& first = inputs.front().noisy;
  Tensor t(Shape{static_cast<int>(inputs.size()), 2, first.height(), first.width()});
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    require_same_shape(first, inputs[i].noisy, "pack_inputs");
    require_same_shape(inputs[i].noisy, inputs[i].boundary, "pack_inputs");
    nn::store_image(t, static_cast<int>(i), 0, inputs[i].noisy);
    nn::store_image(t, static_cast<int>(i), 1, inputs[i].boundary);
  }
  return t;
}

namespace {

class ResBlock {
 public:
  ResBlock() = default;
  ResBlock(nn::ParamSet& params, const std::string& name, int in_ch, int out_ch, int emb_dim,
           int groups, Rng& rng)
      : norm1_(params, name + ".norm1", in_ch, groups),
        conv1_(params, name + ".conv1", in_ch, out_ch, 3, 1, rng),
        emb_(params, name + ".emb", emb_dim, out_ch, 1, 1, rng),
        norm2_(params, name + ".norm2", out_ch, groups),
        conv2_(params, name + ".conv2", out_ch, out_ch, 3, 1, rng),
        has_skip_(in_ch != out_ch) {
    if (has_skip_) skip_ = Conv2d(params, name + ".skip", in_ch, out_ch, 1, 1, rng);
  }

  Var operator()(const Var& x, const Var& emb) const {
    Var h = conv1_(nn::silu(norm1_(x)));
    h = nn::add_channel_bias(h, emb_(emb));
    h = conv2_(nn::silu(norm2_(h)));
    return nn::add(h, has_skip_ ? skip_(x) : x);
  }

 private:
  GroupNorm norm1_;
  Conv2d conv1_;
  Conv2d emb_;
  GroupNorm norm2_;
  Conv2d conv2_;
  Conv2d skip_;
  bool has_skip_ = false;
};

}  // namespace

struct UNetDenoiser::Impl {
  int emb_width = 0;
  Conv2d emb1, emb2;
  Conv2d in_conv;
  ResBlock down_block1, down_block2, mid_block, up_block2, up_block1;
  Conv2d down1, down2, up2, up1;
  GroupNorm out_norm;
  Conv2d out_conv;
};

UNetDenoiser::UNetDenoiser(UNetOptions options) : options_(options), impl_(std::make_unique<Impl>()) {
  const int c = options.base_width;
  const int g = options.groups;
  if (c <= 0 || c % 2 != 0 || g <= 0 || c % g != 0) {
    throw Error(ErrorKind::ConfigError,
                "denoiser base_width must be even and divisible by groups");
  }
  Rng rng(options.init_seed);
  auto& m = *impl_;
  auto& p = params_;
  m.emb_width = 4 * c;
  m.emb1 = Conv2d(p, "time.fc1", c, 4 * c, 1, 1, rng);
  m.emb2 = Conv2d(p, "time.fc2", 4 * c, 4 * c, 1, 1, rng);
  m.in_conv = Conv2d(p, "in", 2, c, 3, 1, rng);
  m.down_block1 = ResBlock(p, "down1.block", c, c, 4 * c, g, rng);
  m.down1 = Conv2d(p, "down1.resample", c, c, 3, 2, rng);
  m.down_block2 = ResBlock(p, "down2.block", c, 2 * c, 4 * c, g, rng);
  m.down2 = Conv2d(p, "down2.resample", 2 * c, 2 * c, 3, 2, rng);
  m.mid_block = ResBlock(p, "mid.block", 2 * c, 2 * c, 4 * c, g, rng);
  m.up2 = Conv2d(p, "up2.resample", 2 * c, 2 * c, 3, 1, rng);
  m.up_block2 = ResBlock(p, "up2.block", 4 * c, 2 * c, 4 * c, g, rng);
  m.up1 = Conv2d(p, "up1.resample", 2 * c, c, 3, 1, rng);
  m.up_block1 = ResBlock(p, "up1.block", 2 * c, c, 4 * c, g, rng);
  m.out_norm = GroupNorm(p, "out.norm", c, g);
  m.out_conv = Conv2d(p, "out.conv", c, 1, 3, 1, rng, /*zero_init=*/true);
}

UNetDenoiser::~UNetDenoiser() = default;

std::string UNetDenoiser::architecture() const {
  return "unet;base_width=" + std::to_string(options_.base_width) +
         ";groups=" + std::to_string(options_.groups) + ";levels=3";
}

Var UNetDenoiser::forward(const Var& input, std::span<const int> steps) {
  const Shape s = input->shape();
  if (s.c != 2 || static_cast<std::size_t>(s.n) != steps.size()) {
    throw Error(ErrorKind::DimensionMismatch, "denoiser input must be [N,2,H,W] with N steps");
  }
  if (s.h % 4 != 0 || s.w % 4 != 0) {
    throw Error(ErrorKind::OddDimension, "denoiser input dims must be divisible by 4");
  }
  const auto& m = *impl_;
  Var emb = nn::constant(step_embedding(steps, options_.base_width));
  emb = m.emb2(nn::silu(m.emb1(emb)));
  emb = nn::silu(emb);

  Var h0 = m.in_conv(input);
  Var skip1 = m.down_block1(h0, emb);
  Var h = m.down1(skip1);
  Var skip2 = m.down_block2(h, emb);
  h = m.down2(skip2);
  h = m.mid_block(h, emb);
  h = m.up2(nn::upsample_nearest(h));
  h = m.up_block2(nn::concat_channels({h, skip2}), emb);
  h = m.up1(nn::upsample_nearest(h));
  h = m.up_block1(nn::concat_channels({h, skip1}), emb);
  return m.out_conv(nn::silu(m.out_norm(h)));
}

NetworkPredictor::NetworkPredictor(DenoiserNetwork& network, int total_steps,
                                   std::vector<nn::Tensor>* weights)
    : network_(network), total_steps_(total_steps), weights_(weights) {}

std::vector<Image2D> NetworkPredictor::predict_batch(std::span<const ConditionedInput> inputs) {
  std::vector<int> steps;
  steps.reserve(inputs.size());
  for (const auto& in : inputs) {
    if (in.t < 1 || in.t > total_steps_) {
      throw Error(ErrorKind::StepOutOfRange, "predict_noise: step " + std::to_string(in.t));
    }
    steps.push_back(in.t);
  }
  nn::NoGradGuard no_grad;
  Var x = nn::constant(pack_inputs(inputs));
  Var y;
  if (weights_ != nullptr) {
    // Evaluate with the substituted weights, then restore the live ones.
    auto& w = *weights_;
    nn::swap_values(network_.params(), w);
    try {
      y = network_.forward(x, steps);
    } catch (...) {
      nn::swap_values(network_.params(), w);
      throw;
    }
    nn::swap_values(network_.params(), w);
  } else {
    y = network_.forward(x, steps);
  }
  std::vector<Image2D> out;
  out.reserve(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    out.push_back(nn::load_image(y->value, static_cast<int>(i), 0));
  }
  return out;
}

TrainingDraw draw_training_sample(const Image2D& clean, const Image2D& boundary,
                                  const AlphaSchedule& schedule, NoiseKind noise,
                                  std::uint64_t seed) {
  require_same_shape(clean, boundary, "draw_training_sample");
  Rng rng(derive_seed(seed, 0));
  TrainingDraw draw;
  const int total = schedule.total_steps();
  draw.t = rng.uniform_int(1, total);
  draw.noise = sample_noise(NoiseSpec{noise, clean.width(), clean.height(), derive_seed(seed, 1)});
  draw.noisy = forward_diffuse(clean, draw.t, schedule, draw.noise);
  draw.boundary_t = threshold_boundary(boundary, draw.t, total);
  return draw;
}

Var denoiser_loss(DenoiserNetwork& network, std::span<const Image2D> clean,
                  std::span<const Image2D> boundaries, const AlphaSchedule& schedule,
                  NoiseKind noise, std::uint64_t seed) {
  if (clean.empty()) throw Error(ErrorKind::EmptyDataset, "denoiser_loss: empty batch");
  if (clean.size() != boundaries.size()) {
    throw Error(ErrorKind::DimensionMismatch, "denoiser_loss: boundary count differs");
  }
  std::vector<ConditionedInput> inputs;
  std::vector<Image2D> targets;
  std::vector<int> steps;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    TrainingDraw d = draw_training_sample(clean[i], boundaries[i], schedule, noise,
                                          derive_seed(seed, i));
    steps.push_back(d.t);
    targets.push_back(std::move(d.noise));
    inputs.push_back(ConditionedInput{std::move(d.noisy), std::move(d.boundary_t), d.t});
  }
  Var x = nn::constant(pack_inputs(inputs));
  Var target = nn::constant(nn::stack_images(targets));
  return nn::mean_squared_diff(network.forward(x, steps), target);
}

DenoiserTrainer::DenoiserTrainer(DenoiserNetwork& network, AlphaSchedule schedule,
                                 DenoiserTrainOptions options)
    : network_(network),
      schedule_(std::move(schedule)),
      options_(options),
      optimizer_(network.params(), nn::RmsProp::Options{options.lr}),
      ema_(network.params(), options.ema_decay) {}

double DenoiserTrainer::training_step(std::span<const Image2D> clean,
                                      std::span<const Image2D> boundaries, std::uint64_t seed) {
  network_.params().zero_grad();
  Var loss = denoiser_loss(network_, clean, boundaries, schedule_, options_.noise, seed);
  const double value = nn::scalar_value(loss);
  if (!std::isfinite(value) || !network_.params().all_finite()) {
    throw Error(ErrorKind::NanLoss,
                "denoiser loss is not finite at step " + std::to_string(steps_ + 1));
  }
  nn::backward(loss);
  optimizer_.step();
  ema_.update(network_.params());
  ++steps_;
  return value;
}

}  // namespace fddm
