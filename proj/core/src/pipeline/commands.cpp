#include "fddm/pipeline/commands.hpp"

#include <spdlog/spdlog.h>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "fddm/error.hpp"
#include "fddm/image_ops.hpp"
#include "fddm/pipeline/array_io.hpp"
#include "fddm/pipeline/checkpoint.hpp"
#include "fddm/rng.hpp"

namespace fddm::pipeline {

using nlohmann::ordered_json;

namespace {

// Named random streams below the master seed.
enum Stream : std::uint64_t {
  kVaeInit = 101,
  kVaeBatches = 102,
  kVaeSteps = 103,
  kDenoiserInit = 201,
  kDenoiserBatches = 202,
  kDenoiserSteps = 203,
  kSampler = 301,
};

std::uint64_t master_seed(const Config& cfg) {
  return static_cast<std::uint64_t>(cfg.get_int("seed"));
}

int positive(const Config& cfg, const std::string& key) {
  const auto v = cfg.get_int(key);
  if (v <= 0 || v > (1 << 30)) throw Error(ErrorKind::ConfigError, "'" + key + "' must be positive");
  return static_cast<int>(v);
}

int non_negative(const Config& cfg, const std::string& key) {
  const auto v = cfg.get_int(key);
  if (v < 0 || v > (1 << 30)) throw Error(ErrorKind::ConfigError, "'" + key + "' must be >= 0");
  return static_cast<int>(v);
}

NoiseKind noise_from(const Config& cfg, const std::string& key) {
  const std::string v = cfg.get_text(key);
  if (v == "blue") return NoiseKind::blue;
  if (v == "gaussian") return NoiseKind::gaussian;
  throw Error(ErrorKind::ConfigError, "'" + key + "' must be blue or gaussian, got '" + v + "'");
}

std::string fmt_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

// Config echo without the path-valued keys, so that reports do not depend
// on where a run was placed.
ordered_json config_echo(const Config& cfg) {
  ordered_json j = ordered_json::object();
  for (const auto& [k, v] : cfg.resolved()) {
    if (k == "data.dir" || k.rfind("checkpoint.", 0) == 0) continue;
    j[k] = v;
  }
  return j;
}

struct Pairs {
  std::vector<std::string> stems;
  std::vector<Image2D> a;
  std::vector<Image2D> b;
};

// Slices of both modalities matched by stem.
Pairs load_pairs(const fs::path& dir_a, const fs::path& dir_b, int resolution) {
  Slices a = load_slices(dir_a, Modality::mr, resolution);
  Slices b = load_slices(dir_b, Modality::ct, resolution);
  if (a.stems != b.stems) {
    throw Error(ErrorKind::PairingError,
                "file names in " + dir_a.string() + " and " + dir_b.string() + " do not match");
  }
  return Pairs{std::move(a.stems), std::move(a.images), std::move(b.images)};
}

std::vector<DualChannelInput> dual_inputs(const std::vector<Image2D>& images) {
  std::vector<DualChannelInput> out;
  out.reserve(images.size());
  for (const auto& img : images) out.push_back(with_sobel_boundary(img));
  return out;
}

double mean_ssim(const std::vector<Image2D>& pred, const std::vector<Image2D>& ref, double range) {
  std::vector<double> s;
  for (std::size_t i = 0; i < pred.size(); ++i) s.push_back(ssim(pred[i], ref[i], range));
  return mean_std(s).mean;
}

std::vector<int> draw_indices(Rng& rng, int count, int n) {
  std::vector<int> idx(count);
  for (int& i : idx) i = rng.uniform_int(0, n - 1);
  return idx;
}

template <typename T>
std::vector<T> gather(const std::vector<T>& src, const std::vector<int>& idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (int i : idx) out.push_back(src[i]);
  return out;
}

Checkpoint vae_checkpoint(ConvTranslator& net, std::int64_t step, std::uint64_t seed) {
  Checkpoint c;
  c.kind = ModelKind::vae;
  c.architecture = net.architecture();
  c.step = static_cast<std::uint64_t>(step);
  c.seed = seed;
  c.params = capture(net.generator_params());
  for (auto& b : capture(net.discriminator_params())) c.params.push_back(std::move(b));
  return c;
}

void load_translator(ConvTranslator& net, const Config& cfg) {
  const Checkpoint c = load_checkpoint(cfg.get_text("checkpoint.vae"));
  require_architecture(c, ModelKind::vae, net.architecture());
  const std::size_t gen = net.generator_params().size();
  if (c.params.size() != gen + net.discriminator_params().size()) {
    throw Error(ErrorKind::ArchitectureMismatch, "translator checkpoint tensor count differs");
  }
  restore(net.generator_params(),
          std::vector<NamedBlob>(c.params.begin(), c.params.begin() + static_cast<long>(gen)));
  restore(net.discriminator_params(),
          std::vector<NamedBlob>(c.params.begin() + static_cast<long>(gen), c.params.end()));
}

// Live denoiser weights from the checkpoint plus its EMA shadow.
std::vector<nn::Tensor> load_denoiser(UNetDenoiser& net, const Config& cfg) {
  const Checkpoint c = load_checkpoint(cfg.get_text("checkpoint.denoiser"));
  require_architecture(c, ModelKind::denoiser, net.architecture());
  restore(net.params(), c.params);
  return ordered_values(net.params(), c.ema);
}

/// Coarse estimate and its boundary map for each modality-A slice.
struct CoarseSet {
  std::vector<Image2D> coarse;
  std::vector<Image2D> boundary;
};

CoarseSet translate_set(ConvTranslator& net, const std::vector<Image2D>& slices) {
  const auto inputs = dual_inputs(slices);
  CoarseSet out;
  // Guidance is the Sobel map of the coarse estimate, the same operator the
  // denoiser saw on clean slices during training.
  for (auto& y : translate_a_to_b(net, inputs)) {
    out.boundary.push_back(sobel_boundary(y.intensity));
    out.coarse.push_back(std::move(y.intensity));
  }
  return out;
}

std::vector<Image2D> run_sampler(const Config& cfg, UNetDenoiser& net,
                                 std::vector<nn::Tensor>& ema, const CoarseSet& set,
                                 const SamplerConfig& sc, const std::vector<std::uint64_t>& seeds) {
  const AlphaSchedule schedule = schedule_from(cfg);
  NetworkPredictor predictor(net, schedule.total_steps(),
                             cfg.get_bool("sampler.use_ema") ? &ema : nullptr);
  const int batch = positive(cfg, "sampler.batch_size");
  std::vector<Image2D> out;
  for (std::size_t first = 0; first < set.coarse.size(); first += batch) {
    const std::size_t n = std::min<std::size_t>(batch, set.coarse.size() - first);
    auto part = sample_batch(predictor, std::span(set.coarse).subspan(first, n),
                             std::span(set.boundary).subspan(first, n), sc, schedule,
                             std::span(seeds).subspan(first, n));
    for (auto& img : part) out.push_back(std::move(img));
    spdlog::debug("sampled {}/{}", first + n, set.coarse.size());
  }
  return out;
}

std::vector<std::uint64_t> sampler_seeds(const Config& cfg, std::size_t count) {
  const std::uint64_t base = derive_seed(master_seed(cfg), kSampler);
  std::vector<std::uint64_t> seeds(count);
  for (std::size_t i = 0; i < count; ++i) seeds[i] = derive_seed(base, i);
  return seeds;
}

}  // namespace

AlphaSchedule schedule_from(const Config& cfg) {
  return make_schedule(positive(cfg, "diffusion.total_steps"),
                       BetaRange{cfg.get_real("diffusion.beta_start"),
                                 cfg.get_real("diffusion.beta_end")});
}

TranslatorOptions translator_options_from(const Config& cfg) {
  TranslatorOptions o;
  o.base_width = positive(cfg, "vae.base_width");
  o.depth = positive(cfg, "vae.depth");
  o.latent_channels = positive(cfg, "vae.latent_channels");
  o.init_seed = derive_seed(master_seed(cfg), kVaeInit);
  return o;
}

UNetOptions unet_options_from(const Config& cfg) {
  UNetOptions o;
  o.base_width = positive(cfg, "denoiser.base_width");
  o.groups = positive(cfg, "denoiser.groups");
  o.init_seed = derive_seed(master_seed(cfg), kDenoiserInit);
  return o;
}

SamplerConfig sampler_config_from(const Config& cfg) {
  SamplerConfig sc;
  sc.horizon = positive(cfg, "sampler.horizon");
  sc.perturbation_noise = noise_from(cfg, "sampler.perturbation_noise");
  sc.boundary_guidance = cfg.get_bool("sampler.boundary_guidance");
  const std::string paths = cfg.get_text("sampler.paths");
  if (paths == "both") {
    sc.use_explicit_path = sc.use_implicit_path = true;
  } else if (paths == "explicit") {
    sc.use_implicit_path = false;
  } else if (paths == "implicit") {
    sc.use_explicit_path = false;
  } else {
    throw Error(ErrorKind::ConfigError, "'sampler.paths' must be both, explicit or implicit");
  }
  return sc;
}

int resolution_from(const Config& cfg) {
  const int r = positive(cfg, "data.resolution");
  if (r % 4 != 0) throw Error(ErrorKind::ConfigError, "'data.resolution' must be divisible by 4");
  return r;
}

std::vector<int> sweep_horizons_from(const Config& cfg) {
  std::vector<int> out;
  std::stringstream ss(cfg.get_text("sweep.horizons"));
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(item, &used);
      if (v <= 0) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw Error(ErrorKind::ConfigError, "'sweep.horizons' has a bad entry '" + item + "'");
    }
  }
  if (out.empty()) throw Error(ErrorKind::ConfigError, "'sweep.horizons' is empty");
  return out;
}

void cmd_gen_phantoms(const Config& cfg, const fs::path& out) {
  const int count = positive(cfg, "phantom.count");
  const int val = non_negative(cfg, "phantom.val_pairs");
  if (val >= count) {
    throw Error(ErrorKind::ConfigError, "'phantom.val_pairs' must be below 'phantom.count'");
  }
  const auto pairs = generate_phantoms(count, positive(cfg, "phantom.size"), master_seed(cfg));
  for (int i = 0; i < count; ++i) {
    const bool held_out = i >= count - val;
    char stem[32];
    std::snprintf(stem, sizeof stem, "phantom_%05d", i);
    const fs::path split = out / (held_out ? "val" : "train");
    write_array(split / "a" / (std::string(stem) + kArrayExtension),
                phantom_to_raw_mr(pairs[i].modality_a));
    write_array(split / "b" / (std::string(stem) + kArrayExtension),
                phantom_to_raw_ct(pairs[i].modality_b));
  }
  spdlog::info("wrote {} phantom pairs ({} held out) to {}", count, val, out.string());
}

void cmd_train_vae(const Config& cfg, const fs::path& out) {
  const fs::path root = cfg.get_text("data.dir");
  const int res = resolution_from(cfg);
  const std::uint64_t seed = master_seed(cfg);
  const auto train_a = dual_inputs(load_slices(root / "train" / "a", Modality::mr, res).images);
  const auto train_b = dual_inputs(load_slices(root / "train" / "b", Modality::ct, res).images);
  std::optional<Pairs> val;
  if (fs::is_directory(root / "val" / "a")) val = load_pairs(root / "val" / "a", root / "val" / "b", res);

  TranslatorTrainOptions topt;
  topt.lr = cfg.get_real("vae.lr");
  topt.disc_lr = cfg.get_real("vae.disc_lr");
  topt.weights = LossWeights{cfg.get_real("vae.lambda1"), cfg.get_real("vae.lambda2")};
  topt.rotation_consistency = cfg.get_bool("vae.rotation_consistency");
  ConvTranslator net(translator_options_from(cfg));
  TranslatorTrainer trainer(net, topt);

  const int steps = non_negative(cfg, "vae.steps");
  const int batch = positive(cfg, "vae.batch_size");
  const int every = non_negative(cfg, "vae.checkpoint_every");
  const int log_every = positive(cfg, "vae.log_every");
  const double range = cfg.get_real("metrics.data_range");
  const std::uint64_t batch_seed = derive_seed(seed, kVaeBatches);
  const std::uint64_t step_seed = derive_seed(seed, kVaeSteps);
  spdlog::info("training translator: {} steps, {} + {} slices, {} parameters", steps,
               train_a.size(), train_b.size(), net.generator_params().scalar_count());

  std::ostringstream log;
  log << "step,disc,generator,vae,adversarial,cycle,rotation,val_ssim\n";
  for (int s = 1; s <= steps; ++s) {
    // Independent draws per domain: no pairing reaches the translator.
    Rng rng(derive_seed(batch_seed, static_cast<std::uint64_t>(s)));
    const auto a = gather(train_a, draw_indices(rng, batch, static_cast<int>(train_a.size())));
    const auto b = gather(train_b, draw_indices(rng, batch, static_cast<int>(train_b.size())));
    const TranslatorStepLosses l = trainer.step(a, b, derive_seed(step_seed, static_cast<std::uint64_t>(s)));
    if (s % log_every == 0 || s == steps) {
      std::string val_ssim = "";
      if (val) val_ssim = fmt_real(mean_ssim(translate_set(net, val->a).coarse, val->b, range));
      log << s << ',' << fmt_real(l.disc) << ',' << fmt_real(l.generator_total) << ','
          << fmt_real(l.vae) << ',' << fmt_real(l.adversarial) << ',' << fmt_real(l.cycle) << ','
          << fmt_real(l.rotation) << ',' << val_ssim << '\n';
      spdlog::info("vae step {}/{} disc {:.4f} gen {:.4f} val_ssim {}", s, steps, l.disc,
                   l.generator_total, val_ssim.empty() ? "-" : val_ssim);
    }
    if (every > 0 && s % every == 0 && s != steps) {
      save_checkpoint(out / ("vae_step" + std::to_string(s) + ".ckpt"), vae_checkpoint(net, s, seed));
    }
  }
  save_checkpoint(out / "vae.ckpt", vae_checkpoint(net, steps, seed));
  write_text(out / "vae_log.csv", log.str());
}

void cmd_train_diffusion(const Config& cfg, const fs::path& out) {
  const fs::path root = cfg.get_text("data.dir");
  const int res = resolution_from(cfg);
  const std::uint64_t seed = master_seed(cfg);
  const std::vector<Image2D> clean = load_slices(root / "train" / "b", Modality::ct, res).images;
  std::vector<Image2D> boundaries;
  for (const auto& img : clean) boundaries.push_back(sobel_boundary(img));

  UNetDenoiser net(unet_options_from(cfg));
  DenoiserTrainOptions dopt;
  dopt.lr = cfg.get_real("denoiser.lr");
  dopt.ema_decay = cfg.get_real("denoiser.ema_decay");
  dopt.noise = noise_from(cfg, "denoiser.noise");
  DenoiserTrainer trainer(net, schedule_from(cfg), dopt);

  const int steps = non_negative(cfg, "denoiser.steps");
  const int batch = positive(cfg, "denoiser.batch_size");
  const int every = non_negative(cfg, "denoiser.checkpoint_every");
  const int log_every = positive(cfg, "denoiser.log_every");
  const std::uint64_t batch_seed = derive_seed(seed, kDenoiserBatches);
  const std::uint64_t step_seed = derive_seed(seed, kDenoiserSteps);
  spdlog::info("training denoiser: {} steps, {} slices, {} parameters", steps, clean.size(),
               net.params().scalar_count());

  auto checkpoint = [&](std::int64_t step) {
    Checkpoint c;
    c.kind = ModelKind::denoiser;
    c.architecture = net.architecture();
    c.step = static_cast<std::uint64_t>(step);
    c.seed = seed;
    c.params = capture(net.params());
    c.ema = capture(net.params(), trainer.ema().shadow());
    return c;
  };

  std::ostringstream log;
  log << "step,loss,mean_loss\n";
  double window = 0.0;
  int window_count = 0;
  for (int s = 1; s <= steps; ++s) {
    Rng rng(derive_seed(batch_seed, static_cast<std::uint64_t>(s)));
    const auto idx = draw_indices(rng, batch, static_cast<int>(clean.size()));
    const double loss = trainer.training_step(gather(clean, idx), gather(boundaries, idx),
                                              derive_seed(step_seed, static_cast<std::uint64_t>(s)));
    window += loss;
    ++window_count;
    if (s % log_every == 0 || s == steps) {
      log << s << ',' << fmt_real(loss) << ',' << fmt_real(window / window_count) << '\n';
      spdlog::info("denoiser step {}/{} loss {:.5f} (window mean {:.5f})", s, steps, loss,
                   window / window_count);
      window = 0.0;
      window_count = 0;
    }
    if (every > 0 && s % every == 0 && s != steps) {
      save_checkpoint(out / ("denoiser_step" + std::to_string(s) + ".ckpt"), checkpoint(s));
    }
  }
  save_checkpoint(out / "denoiser.ckpt", checkpoint(steps));
  write_text(out / "denoiser_log.csv", log.str());
}

void cmd_translate(const Config& cfg, const fs::path& input_dir, const fs::path& out) {
  const fs::path vae_path = cfg.get_text("checkpoint.vae");
  const fs::path den_path = cfg.get_text("checkpoint.denoiser");
  ConvTranslator translator(translator_options_from(cfg));
  load_translator(translator, cfg);
  UNetDenoiser denoiser(unet_options_from(cfg));
  std::vector<nn::Tensor> ema = load_denoiser(denoiser, cfg);

  const Slices slices = load_slices(input_dir, Modality::mr, resolution_from(cfg));
  const SamplerConfig sc = sampler_config_from(cfg);
  const CoarseSet set = translate_set(translator, slices.images);
  const auto seeds = sampler_seeds(cfg, set.coarse.size());
  const auto refined = run_sampler(cfg, denoiser, ema, set, sc, seeds);

  ordered_json manifest;
  manifest["seed"] = master_seed(cfg);
  manifest["horizon"] = sc.horizon;
  manifest["paths"] = cfg.get_text("sampler.paths");
  manifest["checkpoints"] = {
      {"vae", {{"file", vae_path.filename().string()}, {"sha256", sha256_file(vae_path)}}},
      {"denoiser", {{"file", den_path.filename().string()}, {"sha256", sha256_file(den_path)}}}};
  manifest["config"] = config_echo(cfg);
  ordered_json outputs = ordered_json::array();
  for (std::size_t i = 0; i < refined.size(); ++i) {
    const std::string& stem = slices.stems[i];
    write_array(out / (stem + ".fddm" + kArrayExtension), refined[i]);
    write_array(out / (stem + ".coarse" + kArrayExtension), set.coarse[i]);
    write_png_preview(out / (stem + ".fddm.png"), refined[i]);
    write_png_preview(out / (stem + ".coarse.png"), set.coarse[i]);
    outputs.push_back({{"stem", stem},
                       {"seed", seeds[i]},
                       {"fddm", stem + ".fddm" + kArrayExtension},
                       {"coarse", stem + ".coarse" + kArrayExtension},
                       {"preview", stem + ".fddm.png"}});
  }
  manifest["outputs"] = outputs;
  write_text(out / "manifest.json", manifest.dump(2) + "\n");
  spdlog::info("translated {} slices into {}", refined.size(), out.string());
}

EvaluationReport cmd_evaluate(const Config& cfg, const fs::path& pred_dir, const fs::path& ref_dir,
                              const EvaluateOptions& options, const fs::path& out) {
  const std::string suffix = "." + options.tag;
  std::vector<ArrayEntry> preds;
  for (auto& e : list_arrays(pred_dir)) {
    if (e.stem.size() > suffix.size() &&
        e.stem.compare(e.stem.size() - suffix.size(), suffix.size(), suffix) == 0) {
      e.stem.resize(e.stem.size() - suffix.size());
      preds.push_back(std::move(e));
    }
  }
  const auto refs = list_arrays(ref_dir);
  if (preds.empty()) {
    throw Error(ErrorKind::PairingError, "no '" + options.tag + "' predictions in " + pred_dir.string());
  }
  if (preds.size() != refs.size() ||
      !std::equal(preds.begin(), preds.end(), refs.begin(),
                  [](const ArrayEntry& a, const ArrayEntry& b) { return a.stem == b.stem; })) {
    throw Error(ErrorKind::PairingError, "prediction and reference file names do not match");
  }

  const double range = cfg.get_real("metrics.data_range");
  EvaluationReport report;
  std::vector<Image2D> pred_images, ref_images;
  std::vector<double> s, p;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    Image2D pred = read_array(preds[i].path);
    Image2D ref = read_array(refs[i].path);
    if (options.ref_modality) ref = preprocess_slice(ref, *options.ref_modality, pred.width());
    ImageScore score{preds[i].stem, ssim(pred, ref, range), psnr(pred, ref, range)};
    s.push_back(score.ssim);
    p.push_back(score.psnr);
    report.images.push_back(score);
    pred_images.push_back(std::move(pred));
    ref_images.push_back(std::move(ref));
  }
  report.ssim = mean_std(s);
  report.psnr = mean_std(p);
  const FidProxyResult fid =
      fid_proxy(pred_images, ref_images, positive(cfg, "metrics.feature_dim"),
                static_cast<std::uint64_t>(cfg.get_int("metrics.feature_seed")), true);
  report.frechet_proxy = fid.frechet;
  report.paired_feature_mse = fid.paired_feature_mse.value_or(0.0);

  std::ostringstream csv;
  csv << "stem,ssim,psnr\n";
  for (const auto& r : report.images) csv << r.stem << ',' << fmt_real(r.ssim) << ',' << fmt_real(r.psnr) << '\n';
  write_text(out / "report.csv", csv.str());

  std::ostringstream summary;
  summary << "metric,mean,std,formatted\n";
  summary << "ssim," << fmt_real(report.ssim.mean) << ',' << fmt_real(report.ssim.std) << ','
          << format_mean_std(report.ssim) << '\n';
  summary << "psnr," << fmt_real(report.psnr.mean) << ',' << fmt_real(report.psnr.std) << ','
          << format_mean_std(report.psnr) << '\n';
  summary << "frechet_proxy," << fmt_real(report.frechet_proxy) << ",,\n";
  write_text(out / "summary.csv", summary.str());

  ordered_json j;
  j["tag"] = options.tag;
  j["count"] = report.images.size();
  j["ssim"] = {{"mean", report.ssim.mean}, {"std", report.ssim.std},
               {"formatted", format_mean_std(report.ssim)}};
  j["psnr"] = {{"mean", report.psnr.mean}, {"std", report.psnr.std},
               {"formatted", format_mean_std(report.psnr)}};
  j["frechet_proxy"] = report.frechet_proxy;
  j["paired_feature_mse"] = report.paired_feature_mse;
  j["feature_dim"] = cfg.get_int("metrics.feature_dim");
  ordered_json rows = ordered_json::array();
  for (const auto& r : report.images) rows.push_back({{"stem", r.stem}, {"ssim", r.ssim}, {"psnr", r.psnr}});
  j["images"] = rows;
  write_text(out / "report.json", j.dump(2) + "\n");
  spdlog::info("{}: SSIM {} PSNR {} frechet_proxy {:.4f}", options.tag,
               format_mean_std(report.ssim), format_mean_std(report.psnr), report.frechet_proxy);
  return report;
}

std::vector<SweepRow> cmd_sweep_horizon(const Config& cfg, const fs::path& out) {
  const fs::path root = cfg.get_text("data.dir");
  ConvTranslator translator(translator_options_from(cfg));
  load_translator(translator, cfg);
  UNetDenoiser denoiser(unet_options_from(cfg));
  std::vector<nn::Tensor> ema = load_denoiser(denoiser, cfg);
  const Pairs val = load_pairs(root / "val" / "a", root / "val" / "b", resolution_from(cfg));
  const CoarseSet set = translate_set(translator, val.a);
  const AlphaSchedule schedule = schedule_from(cfg);
  NetworkPredictor predictor(denoiser, schedule.total_steps(),
                             cfg.get_bool("sampler.use_ema") ? &ema : nullptr);

  SweepOptions so;
  so.data_range = cfg.get_real("metrics.data_range");
  so.feature_dim = positive(cfg, "metrics.feature_dim");
  so.feature_seed = static_cast<std::uint64_t>(cfg.get_int("metrics.feature_seed"));
  so.seed = derive_seed(master_seed(cfg), kSampler);
  const auto rows = sweep_horizon(predictor, set.coarse, set.boundary, val.b,
                                  sweep_horizons_from(cfg), sampler_config_from(cfg), schedule, so);
  write_text(out / "sweep.csv", sweep_csv(rows));

  ordered_json j;
  j["coarse_ssim"] = mean_ssim(set.coarse, val.b, so.data_range);
  ordered_json list = ordered_json::array();
  for (const auto& r : rows) {
    ordered_json row = {{"T_s", r.horizon}, {"ssim", r.ssim}, {"psnr", r.psnr}};
    row["frechet_proxy"] = std::isnan(r.frechet_proxy) ? ordered_json(nullptr) : ordered_json(r.frechet_proxy);
    list.push_back(row);
    spdlog::info("T_s {}: SSIM {:.4f} PSNR {:.3f}", r.horizon, r.ssim, r.psnr);
  }
  j["rows"] = list;
  write_text(out / "sweep.json", j.dump(2) + "\n");
  return rows;
}

}  // namespace fddm::pipeline
