#pragma once

#include <vector>

#include "fddm/image.hpp"
#include "fddm/noise.hpp"

namespace fddm {

/// Cumulative retention products alpha_bar[t] for t = 1..T.
///
/// Wherever the diffusion formulas write alpha_t against the clean image,
/// this is the quantity used.
class AlphaSchedule {
 public:
  AlphaSchedule() = default;
  /// Throws BadSteps if the sequence is empty, not strictly decreasing or
  /// leaves (0, 1].
  explicit AlphaSchedule(std::vector<double> alpha_bar);

  int total_steps() const noexcept { return static_cast<int>(alpha_bar_.size()); }
  /// 1-based; t = 0 yields 1 (the clean image).
  double alpha_bar(int t) const;

 private:
  std::vector<double> alpha_bar_;
};

struct BetaRange {
  double start = 1e-4;
  double end = 0.02;
};

/// Linear beta from range.start to range.end over t = 1..T, alpha_bar the
/// running product of (1 - beta). Throws BadSteps when total_steps < 2.
AlphaSchedule make_schedule(int total_steps, BetaRange range = {});

/// sqrt(alpha_bar[t]) * img + sqrt(1 - alpha_bar[t]) * noise.
Image2D forward_diffuse(const Image2D& img, int t, const AlphaSchedule& schedule,
                        const Image2D& noise);

/// DDPM stochasticity coefficient for step t in [2, T]:
///   sqrt((1 - a_{t-1}) / (1 - a_t)) * sqrt(1 - a_t / a_{t-1}).
double sigma_ddpm(int t, const AlphaSchedule& schedule);
/// Same closed form on explicit cumulative values.
double sigma_ddpm(double alpha_bar_prev, double alpha_bar_t);

/// SNR(f) = a_t S(f) / ((1 - a_t) N(f)) with N = 1 for Gaussian noise and
/// N proportional to f, rescaled to unit mean over the bins, for blue noise.
RadialPsd per_frequency_snr(const RadialPsd& img_psd, int t, const AlphaSchedule& schedule,
                            NoiseKind noise_kind);

}  // namespace fddm
