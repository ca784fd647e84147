#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

#include "fddm/error.hpp"
#include "fddm/pipeline/commands.hpp"
#include "fddm/runtime.hpp"

namespace fddm::pipeline {

namespace {

void configure_logging() {
  static bool done = false;
  if (!done) {
    spdlog::set_default_logger(spdlog::stderr_color_st("fddm"));
    spdlog::set_pattern("[%l] %v");
    done = true;
  }
  const char* env = std::getenv("FDDM_LOG");
  spdlog::set_level(env != nullptr ? spdlog::level::from_str(env) : spdlog::level::info);
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  configure_logging();
  retain_heap_memory();

  CLI::App app{"Two-stage modality translation with frequency-decoupled diffusion", "fddm"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::int64_t> seed;
  std::optional<int> resolution;
  std::string out = ".";
  app.add_option("--config", config_path, "Configuration file (key=value)");
  app.add_option("--seed", seed, "Override the master seed");
  app.add_option("--resolution", resolution, "Override data.resolution");
  app.add_option("--out", out, "Output directory");

  auto* gen = app.add_subcommand("gen-phantoms", "Write a synthetic paired phantom corpus");
  auto* train_vae = app.add_subcommand("train-vae", "Train the shared-latent translator");
  auto* train_diff = app.add_subcommand("train-diffusion", "Train the noise predictor");
  auto* translate = app.add_subcommand("translate", "Translate modality-A slices");
  std::string input_dir;
  translate->add_option("--input", input_dir, "Directory of raw modality-A arrays")->required();
  auto* evaluate = app.add_subcommand("evaluate", "Score predictions against references");
  std::string pred_dir, ref_dir, ref_modality;
  EvaluateOptions eval_options;
  evaluate->add_option("--pred", pred_dir, "Directory of <stem>.<tag>.fda predictions")->required();
  evaluate->add_option("--ref", ref_dir, "Directory of <stem>.fda references")->required();
  evaluate->add_option("--tag", eval_options.tag, "Prediction suffix (fddm or coarse)");
  evaluate->add_option("--ref-modality", ref_modality, "Preprocess references as mr or ct")
      ->check(CLI::IsMember({"mr", "ct"}));
  auto* sweep = app.add_subcommand("sweep-horizon", "Score the sampler over several horizons");

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    Config cfg = config_path.empty() ? Config{} : Config::load(config_path);
    if (seed) cfg.set("seed", std::to_string(*seed));
    if (resolution) cfg.set("data.resolution", std::to_string(*resolution));
    const fs::path out_dir = out;
    fs::create_directories(out_dir);

    if (gen->parsed()) {
      cmd_gen_phantoms(cfg, out_dir);
    } else if (train_vae->parsed()) {
      cmd_train_vae(cfg, out_dir);
    } else if (train_diff->parsed()) {
      cmd_train_diffusion(cfg, out_dir);
    } else if (translate->parsed()) {
      cmd_translate(cfg, input_dir, out_dir);
    } else if (evaluate->parsed()) {
      if (!ref_modality.empty()) {
        eval_options.ref_modality = ref_modality == "mr" ? Modality::mr : Modality::ct;
      }
      cmd_evaluate(cfg, pred_dir, ref_dir, eval_options, out_dir);
    } else if (sweep->parsed()) {
      cmd_sweep_horizon(cfg, out_dir);
    }
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return exit_code_for(e.kind());
  } catch (const fs::filesystem_error& e) {
    spdlog::error("IoError: {}", e.what());
    return 3;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 3;
  }
  return 0;
}

}  // namespace fddm::pipeline
