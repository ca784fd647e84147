#include "fddm/pipeline/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "fddm/error.hpp"

namespace fddm::pipeline {

namespace {

using enum KeyType;

constexpr KeySpec kKeys[] = {
    {"seed", integer, "0", "Master seed; every random stream derives from it."},
    {"phantom.count", integer, "256", "Number of phantom pairs written by gen-phantoms."},
    {"phantom.size", integer, "32", "Phantom side length in pixels (divisible by 4)."},
    {"phantom.val_pairs", integer, "32", "Pairs held out into val/ by gen-phantoms."},
    {"data.dir", text, std::nullopt,
     "Dataset root holding train/{a,b} and val/{a,b} raw arrays."},
    {"data.resolution", integer, "32", "Side length slices are resized to (divisible by 4)."},
    {"diffusion.total_steps", integer, "1000", "Number of diffusion steps T."},
    {"diffusion.beta_start", real, "0.0001", "First value of the linear beta schedule."},
    {"diffusion.beta_end", real, "0.02", "Last value of the linear beta schedule."},
    {"vae.lr", real, "0.0001", "Translator learning rate."},
    {"vae.disc_lr", real, "0.0001", "Discriminator learning rate."},
    {"vae.lambda1", real, "0.01", "Weight of the KL terms."},
    {"vae.lambda2", real, "10", "Weight of the L1 reconstruction, cycle and rotation terms."},
    {"vae.depth", integer, "2", "Number of stride-2 stages in encoders and decoders."},
    {"vae.base_width", integer, "8", "Channels after the first encoder convolution."},
    {"vae.latent_channels", integer, "16", "Channels of the shared latent code."},
    {"vae.batch_size", integer, "4", "Images per domain in each translator step."},
    {"vae.steps", integer, "2000", "Translator training steps."},
    {"vae.rotation_consistency", boolean, "true", "Add the rotation-consistency loss."},
    {"vae.checkpoint_every", integer, "500", "Steps between intermediate checkpoints (0: none)."},
    {"vae.log_every", integer, "50", "Steps between loss rows in the training log."},
    {"denoiser.lr", real, "0.0002", "Denoiser learning rate."},
    {"denoiser.ema_decay", real, "0.9999", "EMA decay of the inference weights."},
    {"denoiser.base_width", integer, "16", "Channels at full resolution in the U-Net."},
    {"denoiser.groups", integer, "8", "Group-norm groups (must divide base_width)."},
    {"denoiser.batch_size", integer, "8", "Images per denoiser step."},
    {"denoiser.steps", integer, "3000", "Denoiser training steps."},
    {"denoiser.noise", text, "blue", "Training noise: blue or gaussian."},
    {"denoiser.checkpoint_every", integer, "1000", "Steps between intermediate checkpoints (0: none)."},
    {"denoiser.log_every", integer, "50", "Steps between loss rows in the training log."},
    {"sampler.horizon", integer, "300", "Forward diffusion horizon T_s applied to the coarse image."},
    {"sampler.perturbation_noise", text, "blue", "Explicit-path perturbation: blue or gaussian."},
    {"sampler.boundary_guidance", boolean, "true", "Condition on the thresholded boundary."},
    {"sampler.paths", text, "both", "Reverse paths: both, explicit or implicit."},
    {"sampler.use_ema", boolean, "true", "Sample with the EMA weights."},
    {"sampler.batch_size", integer, "32", "Images denoised together."},
    {"sweep.horizons", text, "100,300,500,700,900", "Comma-separated horizons for sweep-horizon."},
    {"metrics.feature_dim", integer, "64", "Feature width of the Frechet proxy."},
    {"metrics.feature_seed", integer, "0", "Seed of the fixed random feature network."},
    {"metrics.data_range", real, "2", "Dynamic range R used by SSIM and PSNR."},
    {"checkpoint.vae", text, std::nullopt, "Translator checkpoint used by translate and sweeps."},
    {"checkpoint.denoiser", text, std::nullopt, "Denoiser checkpoint used by translate and sweeps."},
};

const KeySpec& spec_for(const std::string& key) {
  for (const auto& k : kKeys) {
    if (k.key == key) return k;
  }
  throw Error(ErrorKind::ConfigError, "unknown config key '" + key + "'");
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::optional<std::int64_t> parse_int(const std::string& v) {
  std::int64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) return std::nullopt;
  return out;
}

std::optional<double> parse_real(const std::string& v) {
  double out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) return std::nullopt;
  return out;
}

std::optional<bool> parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  return std::nullopt;
}

bool valid(KeyType type, const std::string& v) {
  switch (type) {
    case integer: return parse_int(v).has_value();
    case real: return parse_real(v).has_value();
    case boolean: return parse_bool(v).has_value();
    case text: return true;
  }
  return false;
}

const char* type_name(KeyType t) {
  switch (t) {
    case integer: return "an integer";
    case real: return "a number";
    case boolean: return "a boolean";
    case text: return "text";
  }
  return "?";
}

}  // namespace

std::span<const KeySpec> known_keys() { return kKeys; }

Config Config::parse(std::string_view text, const std::string& origin) {
  Config cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    const std::string where = origin + ":" + std::to_string(lineno);
    if (eq == std::string::npos) {
      throw Error(ErrorKind::ConfigError, where + ": expected key=value");
    }
    const std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    if (cfg.is_set(key)) throw Error(ErrorKind::ConfigError, where + ": duplicate key '" + key + "'");
    try {
      cfg.set(key, value);
    } catch (const Error& e) {
      throw Error(ErrorKind::ConfigError, where + ": " + e.detail());
    }
  }
  return cfg;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ConfigError, "cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.string());
}

void Config::set(const std::string& key, const std::string& value) {
  const KeySpec& spec = spec_for(key);
  if (!valid(spec.type, value)) {
    throw Error(ErrorKind::ConfigError,
                "value '" + value + "' of '" + key + "' is not " + type_name(spec.type));
  }
  values_[key] = value;
}

std::string Config::raw(const std::string& key, KeyType type) const {
  const KeySpec& spec = spec_for(key);
  if (spec.type != type) {
    throw Error(ErrorKind::ConfigError, "config key '" + key + "' is not " + type_name(type));
  }
  if (auto it = values_.find(key); it != values_.end()) return it->second;
  if (spec.default_value) return std::string(*spec.default_value);
  throw Error(ErrorKind::ConfigError, "missing config key '" + key + "'");
}

std::int64_t Config::get_int(const std::string& key) const { return *parse_int(raw(key, integer)); }
double Config::get_real(const std::string& key) const { return *parse_real(raw(key, real)); }
bool Config::get_bool(const std::string& key) const { return *parse_bool(raw(key, boolean)); }
std::string Config::get_text(const std::string& key) const { return raw(key, text); }

std::map<std::string, std::string> Config::resolved() const {
  std::map<std::string, std::string> out;
  for (const auto& k : kKeys) {
    const std::string key(k.key);
    if (auto it = values_.find(key); it != values_.end()) {
      out[key] = it->second;
    } else if (k.default_value) {
      out[key] = std::string(*k.default_value);
    }
  }
  return out;
}

}  // namespace fddm::pipeline
