#include "fddm/schedule.hpp"

#include <cmath>
#include <string>

#include "fddm/error.hpp"

namespace fddm {

namespace {

void require_step(int t, int lo, int hi, const char* what) {
  if (t < lo || t > hi) {
    throw Error(ErrorKind::StepOutOfRange, std::string(what) + ": step " + std::to_string(t) +
                                               " outside [" + std::to_string(lo) + ", " +
                                               std::to_string(hi) + "]");
  }
}

}  // namespace

AlphaSchedule::AlphaSchedule(std::vector<double> alpha_bar) : alpha_bar_(std::move(alpha_bar)) {
  if (alpha_bar_.empty()) throw Error(ErrorKind::BadSteps, "empty schedule");
  for (std::size_t i = 0; i < alpha_bar_.size(); ++i) {
    const double a = alpha_bar_[i];
    if (!(a > 0.0 && a <= 1.0)) {
      throw Error(ErrorKind::BadSteps, "alpha_bar outside (0, 1] at t=" + std::to_string(i + 1));
    }
    if (i > 0 && !(a < alpha_bar_[i - 1])) {
      throw Error(ErrorKind::BadSteps,
                  "alpha_bar not strictly decreasing at t=" + std::to_string(i + 1));
    }
  }
}

double AlphaSchedule::alpha_bar(int t) const {
  if (t == 0) return 1.0;
  require_step(t, 0, total_steps(), "alpha_bar");
  return alpha_bar_[static_cast<std::size_t>(t - 1)];
}

AlphaSchedule make_schedule(int total_steps, BetaRange range) {
  if (total_steps < 2) {
    throw Error(ErrorKind::BadSteps, "total_steps must be >= 2, got " + std::to_string(total_steps));
  }
  if (!(range.start > 0.0 && range.end < 1.0 && range.start <= range.end)) {
    throw Error(ErrorKind::BadSteps, "beta range must satisfy 0 < start <= end < 1");
  }
  std::vector<double> alpha_bar(static_cast<std::size_t>(total_steps));
  double prod = 1.0;
  for (int t = 1; t <= total_steps; ++t) {
    const double beta =
        range.start + (range.end - range.start) * (t - 1) / static_cast<double>(total_steps - 1);
    prod *= 1.0 - beta;
    alpha_bar[static_cast<std::size_t>(t - 1)] = prod;
  }
  return AlphaSchedule(std::move(alpha_bar));
}

Image2D forward_diffuse(const Image2D& img, int t, const AlphaSchedule& schedule,
                        const Image2D& noise) {
  require_same_shape(img, noise, "forward_diffuse");
  require_step(t, 1, schedule.total_steps(), "forward_diffuse");
  const double a = schedule.alpha_bar(t);
  return axpby(std::sqrt(a), img, std::sqrt(1.0 - a), noise);
}

double sigma_ddpm(double alpha_bar_prev, double alpha_bar_t) {
  if (alpha_bar_t >= 1.0) return 0.0;
  const double first = std::sqrt((1.0 - alpha_bar_prev) / (1.0 - alpha_bar_t));
  const double second = std::sqrt(std::max(0.0, 1.0 - alpha_bar_t / alpha_bar_prev));
  return first * second;
}

double sigma_ddpm(int t, const AlphaSchedule& schedule) {
  require_step(t, 2, schedule.total_steps(), "sigma_ddpm");
  return sigma_ddpm(schedule.alpha_bar(t - 1), schedule.alpha_bar(t));
}

RadialPsd per_frequency_snr(const RadialPsd& img_psd, int t, const AlphaSchedule& schedule,
                            NoiseKind noise_kind) {
  require_step(t, 1, schedule.total_steps(), "per_frequency_snr");
  const double a = schedule.alpha_bar(t);
  double mean_f = 0.0;
  for (const auto& bin : img_psd.bins) mean_f += bin.frequency;
  if (!img_psd.bins.empty()) mean_f /= static_cast<double>(img_psd.bins.size());

  RadialPsd snr;
  for (const auto& bin : img_psd.bins) {
    const double noise_power =
        noise_kind == NoiseKind::gaussian ? 1.0 : (mean_f > 0.0 ? bin.frequency / mean_f : 0.0);
    if (noise_power <= 0.0) continue;
    snr.bins.push_back({bin.frequency, a * bin.mean_power / ((1.0 - a) * noise_power)});
  }
  return snr;
}

}  // namespace fddm
