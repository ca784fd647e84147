#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fddm/denoiser.hpp"
#include "fddm/image.hpp"
#include "fddm/noise.hpp"
#include "fddm/schedule.hpp"

namespace fddm {

enum class SamplerPaths { both, explicit_only, implicit_only };

struct SamplerConfig {
  int horizon = 300;
  NoiseKind perturbation_noise = NoiseKind::blue;
  bool use_explicit_path = true;
  bool use_implicit_path = true;
  bool boundary_guidance = true;
  /// Multiplies the DDPM sigma of the explicit path. 1 is the stochastic
  /// update; 0 collapses it onto the deterministic one.
  double sigma_scale = 1.0;
};

/// Zeroes pixels strictly below (horizon - t) / horizon. Throws
/// RangeViolation for boundary values outside [0, 1] and StepOutOfRange
/// unless 0 <= t <= horizon.
Image2D threshold_boundary(const Image2D& boundary, int t, int horizon);

struct X0Prediction {
  Image2D x0;
  Image2D eps;
};

/// (noisy - sqrt(1 - a_t) eps) / sqrt(a_t).
Image2D x0_from_eps(const Image2D& noisy, const Image2D& eps, int t, const AlphaSchedule& schedule);

X0Prediction predict_x0(NoisePredictor& predictor, const Image2D& noisy,
                        const Image2D& boundary_t, int t, const AlphaSchedule& schedule);

/// sqrt(a_{t-1}) y0 + sigma_t perturbation + sqrt(1 - a_{t-1} - sigma_t^2) eps,
/// with sigma_t the DDPM value times sigma_scale.
Image2D step_explicit(const Image2D& fused_x0, const Image2D& eps, int t,
                      const AlphaSchedule& schedule, const Image2D& perturbation,
                      double sigma_scale = 1.0);

/// sqrt(a_{t-1}) y0 + sqrt(1 - a_{t-1}) eps. Deterministic.
Image2D step_implicit(const Image2D& fused_x0, const Image2D& eps, int t,
                      const AlphaSchedule& schedule);

/// Everything the loop computed at step t for one image.
struct SamplerStep {
  std::size_t image = 0;
  int t = 0;
  const Image2D* h = nullptr;
  const Image2D* l = nullptr;
  const Image2D* h0 = nullptr;
  const Image2D* l0 = nullptr;
  const Image2D* fused = nullptr;
  const Image2D* boundary_t = nullptr;
  const Image2D* h_next = nullptr;
  const Image2D* l_next = nullptr;
};
using SamplerObserver = std::function<void(const SamplerStep&)>;

/// Seeds of the noise fields used for one image: forward diffusion draws
/// blue noise from derive_seed(seed, 0); the perturbation at step t uses
/// derive_seed(seed, 1 + t).
std::uint64_t forward_noise_seed(std::uint64_t seed);
std::uint64_t perturbation_seed(std::uint64_t seed, int t);

/// Dual-path reverse diffusion for a batch of coarse images. All images in
/// a batch must share dimensions (divisible by 4). Throws HorizonTooLarge,
/// RangeViolation, DimensionMismatch.
std::vector<Image2D> sample_batch(NoisePredictor& predictor, std::span<const Image2D> coarse,
                                  std::span<const Image2D> boundaries, const SamplerConfig& config,
                                  const AlphaSchedule& schedule,
                                  std::span<const std::uint64_t> seeds,
                                  const SamplerObserver& observer = {});

Image2D sample(NoisePredictor& predictor, const Image2D& coarse, const Image2D& boundary,
               const SamplerConfig& config, const AlphaSchedule& schedule, std::uint64_t seed,
               const SamplerObserver& observer = {});

struct SweepRow {
  int horizon = 0;
  double ssim = 0.0;
  double psnr = 0.0;
  /// NaN when the set is too small for the feature covariance.
  double frechet_proxy = 0.0;
};

struct SweepOptions {
  double data_range = 2.0;
  int feature_dim = 64;
  std::uint64_t feature_seed = 0;
  std::uint64_t seed = 0;
};

/// Runs the sampler once per horizon and scores the outputs against the
/// references. Rows come back sorted by horizon.
std::vector<SweepRow> sweep_horizon(NoisePredictor& predictor, std::span<const Image2D> coarse,
                                    std::span<const Image2D> boundaries,
                                    std::span<const Image2D> references,
                                    std::vector<int> horizons, SamplerConfig config,
                                    const AlphaSchedule& schedule, const SweepOptions& options);

/// CSV with header "T_s,ssim,psnr,frechet_proxy".
std::string sweep_csv(std::span<const SweepRow> rows);

}  // namespace fddm
