#include "fddm/vae.hpp"

#include <cmath>
#include <string>

#include "fddm/error.hpp"
#include "fddm/image_ops.hpp"
#include "fddm/nn/convert.hpp"

namespace fddm {

using nn::Conv2d;
using nn::GroupNorm;
using nn::Shape;
using nn::Tensor;
using nn::Var;

namespace {

constexpr float kLeak = 0.2f;

int index_of(Domain d) { return d == Domain::A ? 0 : 1; }
const char* tag(Domain d) { return d == Domain::A ? "a" : "b"; }

}  // namespace

DualChannelInput with_sobel_boundary(Image2D intensity) {
  Image2D boundary = sobel_boundary(intensity);
  return DualChannelInput{std::move(intensity), std::move(boundary)};
}

Tensor pack_dual(std::span<const DualChannelInput> inputs) {
  if (inputs.empty()) throw Error(ErrorKind::EmptyDataset, "pack_dual: empty batch");
  const Image2D& first = inputs.front().intensity;
  Tensor t(Shape{static_cast<int>(inputs.size()), 2, first.height(), first.width()});
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    require_same_shape(first, inputs[i].intensity, "pack_dual");
    require_same_shape(first, inputs[i].boundary, "pack_dual");
    nn::store_image(t, static_cast<int>(i), 0, inputs[i].intensity);
    nn::store_image(t, static_cast<int>(i), 1, inputs[i].boundary);
  }
  return t;
}

DualChannelInput unpack_dual(const Tensor& t, int n) {
  if (t.shape.c != 2) throw Error(ErrorKind::DimensionMismatch, "unpack_dual: expected 2 channels");
  return DualChannelInput{nn::load_image(t, n, 0), nn::load_image(t, n, 1)};
}

struct ConvTranslator::Impl {
  // Hidden convolutions are followed by instance normalisation.
  struct Encoder {
    Conv2d in;
    GroupNorm in_norm;
    std::vector<Conv2d> down;
    std::vector<GroupNorm> down_norm;
    Conv2d mid;
    GroupNorm mid_norm;
    Conv2d mu;
  };
  struct Decoder {
    Conv2d in;
    GroupNorm in_norm;
    Conv2d mid;
    GroupNorm mid_norm;
    std::vector<Conv2d> up;
    std::vector<GroupNorm> up_norm;
    Conv2d out;
  };
  struct Discriminator {
    Conv2d c1, c2, out;
  };
  Encoder enc[2];
  Decoder dec[2];
  Discriminator dis[2];
};

ConvTranslator::ConvTranslator(TranslatorOptions options)
    : options_(options), impl_(std::make_unique<Impl>()) {
  const int w = options.base_width;
  if (w <= 0 || options.depth < 1 || options.depth > 4 || options.latent_channels <= 0) {
    throw Error(ErrorKind::ConfigError, "translator: invalid width, depth or latent channels");
  }
  const int top = w << options.depth;
  const int lat = options.latent_channels;
  Rng rng(options.init_seed);
  auto& m = *impl_;
  auto& g = generator_;

  for (Domain d : {Domain::A, Domain::B}) {
    auto& e = m.enc[index_of(d)];
    const std::string p = std::string("enc_") + tag(d);
    e.in = Conv2d(g, p + ".in", 2, w, 3, 1, rng);
    e.in_norm = GroupNorm(g, p + ".in_norm", w, w);
    int ch = w;
    for (int i = 0; i < options.depth; ++i) {
      e.down.emplace_back(g, p + ".down" + std::to_string(i), ch, ch * 2, 3, 2, rng);
      e.down_norm.emplace_back(g, p + ".down" + std::to_string(i) + "_norm", ch * 2, ch * 2);
      ch *= 2;
    }
    e.mid = Conv2d(g, p + ".mid", top, top, 3, 1, rng);
    e.mid_norm = GroupNorm(g, p + ".mid_norm", top, top);
    if (options.share_latent_layers && d == Domain::B) {
      e.mu = m.enc[0].mu;
    } else {
      e.mu = Conv2d(g, (options.share_latent_layers ? std::string("enc_shared") : p) + ".mu",
                    top, lat, 3, 1, rng);
    }
  }
  for (Domain d : {Domain::A, Domain::B}) {
    auto& dc = m.dec[index_of(d)];
    const std::string p = std::string("dec_") + tag(d);
    if (options.share_latent_layers && d == Domain::B) {
      dc.in = m.dec[0].in;
    } else {
      dc.in = Conv2d(g, (options.share_latent_layers ? std::string("dec_shared") : p) + ".in",
                     lat, top, 3, 1, rng);
    }
    dc.in_norm = GroupNorm(g, p + ".in_norm", top, top);
    dc.mid = Conv2d(g, p + ".mid", top, top, 3, 1, rng);
    dc.mid_norm = GroupNorm(g, p + ".mid_norm", top, top);
    int ch = top;
    for (int i = 0; i < options.depth; ++i) {
      dc.up.emplace_back(g, p + ".up" + std::to_string(i), ch, ch / 2, 3, 1, rng);
      dc.up_norm.emplace_back(g, p + ".up" + std::to_string(i) + "_norm", ch / 2, ch / 2);
      ch /= 2;
    }
    dc.out = Conv2d(g, p + ".out", w, 2, 3, 1, rng);
  }
  for (Domain d : {Domain::A, Domain::B}) {
    auto& ds = m.dis[index_of(d)];
    const std::string p = std::string("dis_") + tag(d);
    ds.c1 = Conv2d(discriminator_, p + ".c1", 2, w, 3, 2, rng);
    ds.c2 = Conv2d(discriminator_, p + ".c2", w, 2 * w, 3, 2, rng);
    ds.out = Conv2d(discriminator_, p + ".out", 2 * w, 1, 3, 1, rng);
  }
}

ConvTranslator::~ConvTranslator() = default;

std::string ConvTranslator::architecture() const {
  return "unit-vae;norm=instance;base_width=" + std::to_string(options_.base_width) +
         ";depth=" + std::to_string(options_.depth) +
         ";latent=" + std::to_string(options_.latent_channels) +
         ";shared=" + (options_.share_latent_layers ? "1" : "0");
}

Var ConvTranslator::encode_mean(Domain d, const Var& x) {
  const Shape s = x->shape();
  const int f = 1 << options_.depth;
  if (s.c != 2) throw Error(ErrorKind::DimensionMismatch, "encode: expected 2 channels");
  if (s.h % f != 0 || s.w % f != 0) {
    throw Error(ErrorKind::OddDimension, "encode: dims must be divisible by 2^depth");
  }
  const auto& e = impl_->enc[index_of(d)];
  Var h = nn::leaky_relu(e.in_norm(e.in(x)), kLeak);
  for (std::size_t i = 0; i < e.down.size(); ++i) h = nn::leaky_relu(e.down_norm[i](e.down[i](h)), kLeak);
  h = nn::leaky_relu(e.mid_norm(e.mid(h)), kLeak);
  return e.mu(h);
}

Var ConvTranslator::decode(Domain d, const Var& code) {
  if (code->shape().c != options_.latent_channels) {
    throw Error(ErrorKind::DimensionMismatch, "decode: latent channel count differs");
  }
  const auto& dc = impl_->dec[index_of(d)];
  Var h = nn::leaky_relu(dc.in_norm(dc.in(code)), kLeak);
  h = nn::leaky_relu(dc.mid_norm(dc.mid(h)), kLeak);
  for (std::size_t i = 0; i < dc.up.size(); ++i) {
    h = nn::leaky_relu(dc.up_norm[i](dc.up[i](nn::upsample_nearest(h))), kLeak);
  }
  Var out = dc.out(h);
  return nn::concat_channels(
      {nn::tanh(nn::slice_channels(out, 0, 1)), nn::sigmoid(nn::slice_channels(out, 1, 1))});
}

Var ConvTranslator::discriminate(Domain d, const Var& x) {
  const auto& ds = impl_->dis[index_of(d)];
  Var h = nn::leaky_relu(ds.c1(x), kLeak);
  h = nn::leaky_relu(ds.c2(h), kLeak);
  return ds.out(h);
}

Var sample_latent(const Var& mean, const LossContext& ctx) {
  if (ctx.latent_noise == 0.0) return mean;
  if (ctx.rng == nullptr) throw Error(ErrorKind::ConfigError, "sample_latent: no generator");
  Tensor noise(mean->shape());
  for (float& v : noise.data) v = static_cast<float>(ctx.latent_noise * ctx.rng->normal());
  return nn::add(mean, nn::constant(std::move(noise)));
}

Var kl_unit(const Var& mu) {
  return nn::scale(nn::half_sum_squares(mu), 1.0f / static_cast<float>(mu->shape().c * mu->shape().plane()));
}

namespace {

Var weighted(double lambda, const Var& v) { return nn::scale(v, static_cast<float>(lambda)); }

}  // namespace

Var loss_vae(TranslatorNetwork& net, Domain d, const Var& input, const LossContext& ctx) {
  Var mu = net.encode_mean(d, input);
  Var recon = net.decode(d, sample_latent(mu, ctx));
  return nn::add(weighted(ctx.weights.lambda1, kl_unit(mu)),
                 weighted(ctx.weights.lambda2, nn::mean_abs_diff(input, recon)));
}

AdversarialLoss loss_adversarial(TranslatorNetwork& net, Domain d, const Var& real,
                                 const Var& fake) {
  Var real_logits = net.discriminate(d, real);
  Var fake_logits_detached = net.discriminate(d, nn::detach(fake));
  AdversarialLoss out;
  out.disc = nn::add(nn::mean_softplus(real_logits, -1.0f),
                     nn::mean_softplus(fake_logits_detached, 1.0f));
  out.gen = nn::mean_softplus(net.discriminate(d, fake), -1.0f);
  return out;
}

namespace {

Var cycle_from(TranslatorNetwork& net, Domain d, const Var& input, const Var& mu,
               const Var& translated, const LossContext& ctx) {
  Var mu2 = net.encode_mean(other(d), translated);
  Var back = net.decode(d, sample_latent(mu2, ctx));
  Var kl = nn::add(kl_unit(mu), kl_unit(mu2));
  return nn::add(weighted(ctx.weights.lambda1, kl),
                 weighted(ctx.weights.lambda2, nn::mean_abs_diff(input, back)));
}

Var rotation_from(TranslatorNetwork& net, Domain d, const Var& input, const Var& mu,
                  const LossContext& ctx) {
  const Shape s = input->shape();
  if (s.h != s.w) throw Error(ErrorKind::NotSquare, "rotation consistency needs square inputs");
  const Domain o = other(d);
  Var base = net.decode(o, mu);
  Var image_path = nn::rotate_left(net.decode(o, net.encode_mean(d, nn::rotate_right(input))));
  Var latent_path = nn::rotate_left(net.decode(o, nn::rotate_right(mu)));
  return weighted(ctx.weights.lambda2,
                  nn::add(nn::mean_abs_diff(image_path, base), nn::mean_abs_diff(latent_path, base)));
}

}  // namespace

Var loss_cycle(TranslatorNetwork& net, Domain d, const Var& input, const LossContext& ctx) {
  Var mu = net.encode_mean(d, input);
  Var translated = net.decode(other(d), sample_latent(mu, ctx));
  return cycle_from(net, d, input, mu, translated, ctx);
}

Var loss_rotation_consistency(TranslatorNetwork& net, Domain d, const Var& input,
                              const LossContext& ctx) {
  return rotation_from(net, d, input, net.encode_mean(d, input), ctx);
}

EncodeResult encode(TranslatorNetwork& net, Domain d, const DualChannelInput& input,
                    std::uint64_t noise_seed) {
  nn::NoGradGuard no_grad;
  Var mu = net.encode_mean(d, nn::constant(pack_dual(std::span(&input, 1))));
  Rng rng(noise_seed);
  LossContext ctx{LossWeights{}, 1.0, &rng};
  Var sample = sample_latent(mu, ctx);
  return EncodeResult{mu->value, sample->value, noise_seed};
}

DualChannelInput decode(TranslatorNetwork& net, Domain d, const Tensor& code) {
  nn::NoGradGuard no_grad;
  return unpack_dual(net.decode(d, nn::constant(code))->value, 0);
}

std::vector<DualChannelInput> translate_a_to_b(TranslatorNetwork& net,
                                               std::span<const DualChannelInput> inputs) {
  nn::NoGradGuard no_grad;
  Var y = net.decode(Domain::B, net.encode_mean(Domain::A, nn::constant(pack_dual(inputs))));
  std::vector<DualChannelInput> out;
  out.reserve(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    out.push_back(unpack_dual(y->value, static_cast<int>(i)));
  }
  return out;
}

DualChannelInput translate_a_to_b(TranslatorNetwork& net, const DualChannelInput& input) {
  auto out = translate_a_to_b(net, std::span(&input, 1));
  return std::move(out.front());
}

TranslatorTrainer::TranslatorTrainer(TranslatorNetwork& net, TranslatorTrainOptions options)
    : net_(net),
      options_(options),
      gen_optimizer_(net.generator_params(), nn::RmsProp::Options{options.lr}),
      dis_optimizer_(net.discriminator_params(), nn::RmsProp::Options{options.disc_lr}) {}

namespace {

void require_finite_loss(double v, const char* what, std::int64_t step) {
  if (!std::isfinite(v)) {
    throw Error(ErrorKind::NanLoss,
                std::string(what) + " loss is not finite at step " + std::to_string(step));
  }
}

}  // namespace

TranslatorStepLosses TranslatorTrainer::step(std::span<const DualChannelInput> batch_a,
                                             std::span<const DualChannelInput> batch_b,
                                             std::uint64_t seed) {
  Var x[2] = {nn::constant(pack_dual(batch_a)), nn::constant(pack_dual(batch_b))};
  Rng rng(seed);
  LossContext ctx{options_.weights, 1.0, &rng};
  TranslatorStepLosses out;

  // Discriminator update against the current translations.
  {
    Var fake[2];
    {
      nn::NoGradGuard no_grad;
      for (Domain d : {Domain::A, Domain::B}) {
        Var mu = net_.encode_mean(d, x[index_of(d)]);
        fake[index_of(other(d))] = net_.decode(other(d), sample_latent(mu, ctx));
      }
    }
    net_.discriminator_params().zero_grad();
    Var disc;
    for (Domain d : {Domain::A, Domain::B}) {
      Var real_logits = net_.discriminate(d, x[index_of(d)]);
      Var fake_logits = net_.discriminate(d, fake[index_of(d)]);
      Var term = nn::add(nn::mean_softplus(real_logits, -1.0f),
                         nn::mean_softplus(fake_logits, 1.0f));
      disc = disc ? nn::add(disc, term) : term;
    }
    out.disc = nn::scalar_value(disc);
    require_finite_loss(out.disc, "discriminator", steps_ + 1);
    nn::backward(disc);
    dis_optimizer_.step();
  }

  // Generator update.
  net_.generator_params().zero_grad();
  Var vae, adv, cyc, rot;
  auto accumulate = [](Var& acc, const Var& v) { acc = acc ? nn::add(acc, v) : v; };
  for (Domain d : {Domain::A, Domain::B}) {
    const Var& input = x[index_of(d)];
    Var mu = net_.encode_mean(d, input);
    Var latent = sample_latent(mu, ctx);
    Var recon = net_.decode(d, latent);
    accumulate(vae, nn::add(weighted(ctx.weights.lambda1, kl_unit(mu)),
                            weighted(ctx.weights.lambda2, nn::mean_abs_diff(input, recon))));
    Var translated = net_.decode(other(d), latent);
    accumulate(adv, nn::mean_softplus(net_.discriminate(other(d), translated), -1.0f));
    accumulate(cyc, cycle_from(net_, d, input, mu, translated, ctx));
    if (options_.rotation_consistency) accumulate(rot, rotation_from(net_, d, input, mu, ctx));
  }
  Var total = nn::add(nn::add(vae, adv), cyc);
  if (rot) total = nn::add(total, rot);
  out.vae = nn::scalar_value(vae);
  out.adversarial = nn::scalar_value(adv);
  out.cycle = nn::scalar_value(cyc);
  out.rotation = rot ? nn::scalar_value(rot) : 0.0;
  out.generator_total = nn::scalar_value(total);
  require_finite_loss(out.generator_total, "generator", steps_ + 1);
  nn::backward(total);
  gen_optimizer_.step();
  if (!net_.generator_params().all_finite()) {
    throw Error(ErrorKind::NanLoss,
                "generator parameters became non-finite at step " + std::to_string(steps_ + 1));
  }
  ++steps_;
  return out;
}

}  // namespace fddm
