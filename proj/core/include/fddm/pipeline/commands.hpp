#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fddm/denoiser.hpp"
#include "fddm/metrics.hpp"
#include "fddm/pipeline/config.hpp"
#include "fddm/pipeline/data.hpp"
#include "fddm/sampler.hpp"
#include "fddm/schedule.hpp"
#include "fddm/vae.hpp"

namespace fddm::pipeline {

namespace fs = std::filesystem;

// Builders shared by the commands.
AlphaSchedule schedule_from(const Config& cfg);
TranslatorOptions translator_options_from(const Config& cfg);
UNetOptions unet_options_from(const Config& cfg);
SamplerConfig sampler_config_from(const Config& cfg);
int resolution_from(const Config& cfg);
std::vector<int> sweep_horizons_from(const Config& cfg);

/// Writes phantom.count pairs as raw arrays: the last phantom.val_pairs go
/// to out/val/{a,b}, the rest to out/train/{a,b}.
void cmd_gen_phantoms(const Config& cfg, const fs::path& out);

/// Trains the translator on data.dir/train with pairing withheld. Writes
/// out/vae.ckpt, intermediate out/vae_step<N>.ckpt and out/vae_log.csv.
void cmd_train_vae(const Config& cfg, const fs::path& out);

/// Trains the denoiser on data.dir/train/b. Writes out/denoiser.ckpt,
/// intermediate checkpoints and out/denoiser_log.csv.
void cmd_train_diffusion(const Config& cfg, const fs::path& out);

/// Translates every raw modality-A array in input_dir: <stem>.fddm.fda,
/// <stem>.coarse.fda, PNG previews of both and manifest.json.
void cmd_translate(const Config& cfg, const fs::path& input_dir, const fs::path& out);

struct EvaluateOptions {
  std::string tag = "fddm";
  /// Preprocess the reference arrays as this modality before scoring.
  std::optional<Modality> ref_modality;
};

struct ImageScore {
  std::string stem;
  double ssim = 0.0;
  double psnr = 0.0;
};

struct EvaluationReport {
  std::vector<ImageScore> images;
  MeanStd ssim;
  MeanStd psnr;
  double frechet_proxy = 0.0;
  double paired_feature_mse = 0.0;
};

/// Pairs <stem>.<tag>.fda in pred_dir with <stem>.fda in ref_dir
/// (PairingError on any unmatched file) and writes report.csv,
/// summary.csv and report.json into out.
EvaluationReport cmd_evaluate(const Config& cfg, const fs::path& pred_dir, const fs::path& ref_dir,
                              const EvaluateOptions& options, const fs::path& out);

/// Translates data.dir/val/a, sweeps sweep.horizons against data.dir/val/b
/// and writes sweep.csv and sweep.json.
std::vector<SweepRow> cmd_sweep_horizon(const Config& cfg, const fs::path& out);

/// Command line entry point; returns the process exit code.
int run_cli(const std::vector<std::string>& args);

}  // namespace fddm::pipeline
