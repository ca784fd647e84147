#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "fddm/image.hpp"
#include "fddm/nn/layers.hpp"
#include "fddm/rng.hpp"

namespace fddm {

enum class Domain { A, B };

inline Domain other(Domain d) { return d == Domain::A ? Domain::B : Domain::A; }

/// Intensity plus its [0, 1] boundary map, the two-channel translator input.
struct DualChannelInput {
  Image2D intensity;
  Image2D boundary;
};

/// Pairs an intensity image with its Sobel boundary.
DualChannelInput with_sobel_boundary(Image2D intensity);

/// [N, 2, H, W] batch from dual-channel inputs.
nn::Tensor pack_dual(std::span<const DualChannelInput> inputs);
DualChannelInput unpack_dual(const nn::Tensor& t, int n);

/// The translator's networks: per-domain encoders (mean of the unit
/// covariance posterior), decoders with squashed outputs (tanh intensity,
/// sigmoid boundary) and discriminators returning logits.
class TranslatorNetwork {
 public:
  virtual ~TranslatorNetwork() = default;
  virtual nn::Var encode_mean(Domain d, const nn::Var& x) = 0;
  virtual nn::Var decode(Domain d, const nn::Var& code) = 0;
  virtual nn::Var discriminate(Domain d, const nn::Var& x) = 0;
  virtual nn::ParamSet& generator_params() = 0;
  virtual nn::ParamSet& discriminator_params() = 0;
  virtual std::string architecture() const = 0;
};

struct TranslatorOptions {
  int base_width = 16;
  int depth = 2;
  int latent_channels = 32;
  /// Last encoder layer and first decoder layer shared across domains.
  bool share_latent_layers = true;
  std::uint64_t init_seed = 0;
};

class ConvTranslator final : public TranslatorNetwork {
 public:
  explicit ConvTranslator(TranslatorOptions options);
  ~ConvTranslator() override;

  nn::Var encode_mean(Domain d, const nn::Var& x) override;
  nn::Var decode(Domain d, const nn::Var& code) override;
  nn::Var discriminate(Domain d, const nn::Var& x) override;
  nn::ParamSet& generator_params() override { return generator_; }
  nn::ParamSet& discriminator_params() override { return discriminator_; }
  std::string architecture() const override;
  const TranslatorOptions& options() const noexcept { return options_; }

 private:
  struct Impl;
  TranslatorOptions options_;
  nn::ParamSet generator_;
  nn::ParamSet discriminator_;
  std::unique_ptr<Impl> impl_;
};

struct LossWeights {
  double lambda1 = 0.01;
  double lambda2 = 10.0;
};

/// Shared state for the loss terms. latent_noise scales the unit Gaussian
/// added to encoder means when sampling a code (1 during training).
struct LossContext {
  LossWeights weights;
  double latent_noise = 1.0;
  Rng* rng = nullptr;
};

/// mean + latent_noise * N(0, I) drawn from ctx.rng.
nn::Var sample_latent(const nn::Var& mean, const LossContext& ctx);

/// Closed-form KL(N(mu, I) || N(0, I)) per latent element: 0.5 * sum(mu^2)
/// over the code, divided by its element count, averaged over the batch.
nn::Var kl_unit(const nn::Var& mu);

/// lambda1 KL + lambda2 mean|x - D(E(x) + noise)|.
nn::Var loss_vae(TranslatorNetwork& net, Domain d, const nn::Var& input, const LossContext& ctx);

struct AdversarialLoss {
  nn::Var disc;  // -[log Dis(real) + log(1 - Dis(fake))], fake detached
  nn::Var gen;   // -log Dis(fake)
};
AdversarialLoss loss_adversarial(TranslatorNetwork& net, Domain d, const nn::Var& real,
                                 const nn::Var& fake);

/// lambda1 KL(first pass) + lambda1 KL(second pass)
///   + lambda2 mean|x - D_d(E_other(D_other(E_d(x) + n)) + n')|.
nn::Var loss_cycle(TranslatorNetwork& net, Domain d, const nn::Var& input, const LossContext& ctx);

/// lambda2 mean|LR(D'(E(RR x))) - D'(E x)| + lambda2 mean|LR(D'(RR E x)) - D'(E x)|
/// with D' the other domain's decoder and mean codes throughout. Square
/// inputs only (NotSquare).
nn::Var loss_rotation_consistency(TranslatorNetwork& net, Domain d, const nn::Var& input,
                                  const LossContext& ctx);

struct EncodeResult {
  nn::Tensor mean;
  nn::Tensor sample;
  std::uint64_t noise_seed = 0;
};
EncodeResult encode(TranslatorNetwork& net, Domain d, const DualChannelInput& input,
                    std::uint64_t noise_seed);
DualChannelInput decode(TranslatorNetwork& net, Domain d, const nn::Tensor& code);

/// D_B(mean of E_A(input)); deterministic.
DualChannelInput translate_a_to_b(TranslatorNetwork& net, const DualChannelInput& input);
std::vector<DualChannelInput> translate_a_to_b(TranslatorNetwork& net,
                                               std::span<const DualChannelInput> inputs);

struct TranslatorTrainOptions {
  double lr = 1e-4;
  double disc_lr = 1e-4;
  LossWeights weights;
  bool rotation_consistency = true;
};

/// Loss values of one alternating update.
struct TranslatorStepLosses {
  double disc = 0.0;
  double generator_total = 0.0;
  double vae = 0.0;
  double adversarial = 0.0;
  double cycle = 0.0;
  double rotation = 0.0;
};

/// Alternating optimisation: a discriminator update on both domains, then a
/// generator update on the sum of the VAE, adversarial, cycle and (unless
/// disabled) rotation-consistency losses of both domains.
class TranslatorTrainer {
 public:
  TranslatorTrainer(TranslatorNetwork& net, TranslatorTrainOptions options);

  /// Throws NanLoss when any loss is not finite.
  TranslatorStepLosses step(std::span<const DualChannelInput> batch_a,
                            std::span<const DualChannelInput> batch_b, std::uint64_t seed);

  std::int64_t steps_taken() const noexcept { return steps_; }

 private:
  TranslatorNetwork& net_;
  TranslatorTrainOptions options_;
  nn::RmsProp gen_optimizer_;
  nn::RmsProp dis_optimizer_;
  std::int64_t steps_ = 0;
};

}  // namespace fddm
