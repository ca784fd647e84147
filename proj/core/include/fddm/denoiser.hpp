#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "fddm/image.hpp"
#include "fddm/nn/layers.hpp"
#include "fddm/noise.hpp"
#include "fddm/schedule.hpp"

namespace fddm {

/// Network input for the noise predictor: a noisy image, the thresholded
/// boundary conditioning it and the diffusion step.
struct ConditionedInput {
  Image2D noisy;
  Image2D boundary;
  int t = 1;
};

/// Inference-side noise predictor consumed by the sampler.
class NoisePredictor {
 public:
  virtual ~NoisePredictor() = default;
  /// One output per input, each with the input's dimensions.
  virtual std::vector<Image2D> predict_batch(std::span<const ConditionedInput> inputs) = 0;
  Image2D predict(const ConditionedInput& input);
};

/// Trainable epsilon network. Input is [N, 2, H, W] (noisy, boundary), one
/// step per sample; output is [N, 1, H, W].
class DenoiserNetwork {
 public:
  virtual ~DenoiserNetwork() = default;
  virtual nn::Var forward(const nn::Var& input, std::span<const int> steps) = 0;
  virtual nn::ParamSet& params() = 0;
  /// Key=value description of the architecture, echoed into checkpoints.
  virtual std::string architecture() const = 0;
};

struct UNetOptions {
  int base_width = 32;
  int groups = 8;
  std::uint64_t init_seed = 0;
};

/// Three-level U-shaped network (full, 1/2, 1/4 resolution) with group
/// normalised residual blocks, skip connections and a sinusoidal step
/// embedding. The final convolution starts at zero.
class UNetDenoiser final : public DenoiserNetwork {
 public:
  explicit UNetDenoiser(UNetOptions options);
  ~UNetDenoiser() override;

  nn::Var forward(const nn::Var& input, std::span<const int> steps) override;
  nn::ParamSet& params() override { return params_; }
  std::string architecture() const override;

 private:
  struct Impl;
  UNetOptions options_;
  nn::ParamSet params_;
  std::unique_ptr<Impl> impl_;
};

/// Sinusoidal embedding of integer steps, [N, dim, 1, 1]; dim must be even.
nn::Tensor step_embedding(std::span<const int> steps, int dim);

/// Packs (noisy, boundary) pairs into the [N, 2, H, W] network layout.
nn::Tensor pack_inputs(std::span<const ConditionedInput> inputs);

/// Adapts a DenoiserNetwork to NoisePredictor, optionally evaluating with a
/// substituted weight set (the EMA shadow).
class NetworkPredictor final : public NoisePredictor {
 public:
  NetworkPredictor(DenoiserNetwork& network, int total_steps,
                   std::vector<nn::Tensor>* weights = nullptr);
  std::vector<Image2D> predict_batch(std::span<const ConditionedInput> inputs) override;

 private:
  DenoiserNetwork& network_;
  int total_steps_;
  std::vector<nn::Tensor>* weights_;
};

struct DenoiserTrainOptions {
  double lr = 2e-4;
  double ema_decay = 0.9999;
  NoiseKind noise = NoiseKind::blue;
};

/// Per-sample draws made by one training step.
struct TrainingDraw {
  int t = 1;
  Image2D noise;
  Image2D noisy;
  Image2D boundary_t;
};

/// t uniform in 1..T, noise of the configured kind, y_t by forward
/// diffusion and the boundary thresholded at (T - t) / T.
TrainingDraw draw_training_sample(const Image2D& clean, const Image2D& boundary,
                                  const AlphaSchedule& schedule, NoiseKind noise,
                                  std::uint64_t seed);

/// Mean squared error between predicted and drawn noise over a batch, as an
/// autograd scalar. Sample i uses derive_seed(seed, i).
nn::Var denoiser_loss(DenoiserNetwork& network, std::span<const Image2D> clean,
                      std::span<const Image2D> boundaries, const AlphaSchedule& schedule,
                      NoiseKind noise, std::uint64_t seed);

class DenoiserTrainer {
 public:
  DenoiserTrainer(DenoiserNetwork& network, AlphaSchedule schedule, DenoiserTrainOptions options);

  /// One optimizer update followed by an EMA update. Returns the loss.
  double training_step(std::span<const Image2D> clean, std::span<const Image2D> boundaries,
                       std::uint64_t seed);

  nn::Ema& ema() noexcept { return ema_; }
  const nn::Ema& ema() const noexcept { return ema_; }
  std::int64_t steps_taken() const noexcept { return steps_; }

 private:
  DenoiserNetwork& network_;
  AlphaSchedule schedule_;
  DenoiserTrainOptions options_;
  nn::RmsProp optimizer_;
  nn::Ema ema_;
  std::int64_t steps_ = 0;
};

}  // namespace fddm
