#include "fddm/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "fddm/error.hpp"
#include "fddm/image_ops.hpp"
#include "fddm/metrics.hpp"
#include "fddm/rng.hpp"

namespace fddm {

Image2D threshold_boundary(const Image2D& boundary, int t, int horizon) {
  if (horizon < 1 || t < 0 || t > horizon) {
    throw Error(ErrorKind::StepOutOfRange, "threshold_boundary: t=" + std::to_string(t) +
                                               " horizon=" + std::to_string(horizon));
  }
  const double threshold = static_cast<double>(horizon - t) / horizon;
  Image2D out = boundary;
  for (double& v : out.pixels()) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw Error(ErrorKind::RangeViolation, "boundary values must lie in [0, 1]");
    }
    if (v < threshold) v = 0.0;
  }
  return out;
}

Image2D x0_from_eps(const Image2D& noisy, const Image2D& eps, int t, const AlphaSchedule& schedule) {
  require_same_shape(noisy, eps, "x0_from_eps");
  if (t < 1 || t > schedule.total_steps()) {
    throw Error(ErrorKind::StepOutOfRange, "x0_from_eps: step " + std::to_string(t));
  }
  const double a = schedule.alpha_bar(t);
  const double inv = 1.0 / std::sqrt(a);
  return axpby(inv, noisy, -std::sqrt(1.0 - a) * inv, eps);
}

X0Prediction predict_x0(NoisePredictor& predictor, const Image2D& noisy,
                        const Image2D& boundary_t, int t, const AlphaSchedule& schedule) {
  if (t < 1 || t > schedule.total_steps()) {
    throw Error(ErrorKind::StepOutOfRange, "predict_x0: step " + std::to_string(t));
  }
  X0Prediction p;
  p.eps = predictor.predict(ConditionedInput{noisy, boundary_t, t});
  p.x0 = x0_from_eps(noisy, p.eps, t, schedule);
  return p;
}

Image2D step_explicit(const Image2D& fused_x0, const Image2D& eps, int t,
                      const AlphaSchedule& schedule, const Image2D& perturbation,
                      double sigma_scale) {
  if (t < 1 || t > schedule.total_steps()) {
    throw Error(ErrorKind::StepOutOfRange, "step_explicit: step " + std::to_string(t));
  }
  require_same_shape(fused_x0, eps, "step_explicit");
  require_same_shape(fused_x0, perturbation, "step_explicit");
  const double a_prev = schedule.alpha_bar(t - 1);
  const double sigma = sigma_scale * sigma_ddpm(a_prev, schedule.alpha_bar(t));
  const double eps_coef = std::sqrt(std::max(0.0, 1.0 - a_prev - sigma * sigma));
  const double x0_coef = std::sqrt(a_prev);
  Image2D out(fused_x0.width(), fused_x0.height());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = x0_coef * fused_x0[i] + sigma * perturbation[i] + eps_coef * eps[i];
  }
  return out;
}

Image2D step_implicit(const Image2D& fused_x0, const Image2D& eps, int t,
                      const AlphaSchedule& schedule) {
  if (t < 1 || t > schedule.total_steps()) {
    throw Error(ErrorKind::StepOutOfRange, "step_implicit: step " + std::to_string(t));
  }
  const double a_prev = schedule.alpha_bar(t - 1);
  return axpby(std::sqrt(a_prev), fused_x0, std::sqrt(1.0 - a_prev), eps);
}

std::uint64_t forward_noise_seed(std::uint64_t seed) { return derive_seed(seed, 0); }
std::uint64_t perturbation_seed(std::uint64_t seed, int t) {
  return derive_seed(seed, 1 + static_cast<std::uint64_t>(t));
}

std::vector<Image2D> sample_batch(NoisePredictor& predictor, std::span<const Image2D> coarse,
                                  std::span<const Image2D> boundaries, const SamplerConfig& config,
                                  const AlphaSchedule& schedule,
                                  std::span<const std::uint64_t> seeds,
                                  const SamplerObserver& observer) {
  if (!config.use_explicit_path && !config.use_implicit_path) {
    throw Error(ErrorKind::ConfigError, "sampler needs at least one path enabled");
  }
  if (config.horizon < 1) throw Error(ErrorKind::StepOutOfRange, "sampler horizon must be >= 1");
  if (config.horizon > schedule.total_steps()) {
    throw Error(ErrorKind::HorizonTooLarge, "horizon " + std::to_string(config.horizon) +
                                                " exceeds schedule length " +
                                                std::to_string(schedule.total_steps()));
  }
  const std::size_t count = coarse.size();
  if (boundaries.size() != count || seeds.size() != count) {
    throw Error(ErrorKind::DimensionMismatch, "sample_batch: coarse/boundary/seed counts differ");
  }
  if (count == 0) return {};
  for (std::size_t i = 0; i < count; ++i) {
    require_same_shape(coarse.front(), coarse[i], "sample_batch");
    require_same_shape(coarse[i], boundaries[i], "sample_batch");
    require_finite(coarse[i], "sample_batch");
  }
  const int w = coarse.front().width();
  const int h = coarse.front().height();
  const int horizon = config.horizon;
  const bool run_h = config.use_explicit_path;
  const bool run_l = config.use_implicit_path;

  std::vector<Image2D> hs(count), ls(count), result(count);
  for (std::size_t i = 0; i < count; ++i) {
    const Image2D z = sample_noise(NoiseSpec{NoiseKind::blue, w, h, forward_noise_seed(seeds[i])});
    hs[i] = forward_diffuse(coarse[i], horizon, schedule, z);
    ls[i] = hs[i];
  }
  const Image2D zero_boundary(w, h);

  std::vector<ConditionedInput> inputs;
  for (int t = horizon; t >= 1; --t) {
    inputs.clear();
    std::vector<Image2D> boundary_t(count);
    for (std::size_t i = 0; i < count; ++i) {
      boundary_t[i] = config.boundary_guidance ? threshold_boundary(boundaries[i], t, horizon)
                                               : zero_boundary;
      if (run_h) inputs.push_back(ConditionedInput{hs[i], boundary_t[i], t});
      if (run_l) inputs.push_back(ConditionedInput{ls[i], boundary_t[i], t});
    }
    std::vector<Image2D> eps = predictor.predict_batch(inputs);
    if (eps.size() != inputs.size()) {
      throw Error(ErrorKind::DimensionMismatch, "predictor returned the wrong batch size");
    }
    std::size_t k = 0;
    for (std::size_t i = 0; i < count; ++i) {
      Image2D eps_h, eps_l, h0, l0;
      if (run_h) {
        eps_h = std::move(eps[k++]);
        h0 = x0_from_eps(hs[i], eps_h, t, schedule);
      }
      if (run_l) {
        eps_l = std::move(eps[k++]);
        l0 = x0_from_eps(ls[i], eps_l, t, schedule);
      }
      Image2D fused = run_h && run_l ? pyramid_fuse(h0, l0) : (run_h ? h0 : l0);
      Image2D h_next, l_next;
      if (run_h) {
        const NoiseSpec spec{config.perturbation_noise, w, h, perturbation_seed(seeds[i], t)};
        h_next = step_explicit(fused, eps_h, t, schedule, sample_noise(spec), config.sigma_scale);
      }
      if (run_l) l_next = step_implicit(fused, eps_l, t, schedule);
      if (observer) {
        observer(SamplerStep{i, t, &hs[i], &ls[i], run_h ? &h0 : nullptr, run_l ? &l0 : nullptr,
                             &fused, &boundary_t[i], run_h ? &h_next : nullptr,
                             run_l ? &l_next : nullptr});
      }
      if (run_h) hs[i] = std::move(h_next);
      if (run_l) ls[i] = std::move(l_next);
      if (t == 1) result[i] = std::move(fused);
    }
  }
  return result;
}

Image2D sample(NoisePredictor& predictor, const Image2D& coarse, const Image2D& boundary,
               const SamplerConfig& config, const AlphaSchedule& schedule, std::uint64_t seed,
               const SamplerObserver& observer) {
  auto out = sample_batch(predictor, std::span<const Image2D>(&coarse, 1),
                          std::span<const Image2D>(&boundary, 1),
                          config, schedule, std::span<const std::uint64_t>(&seed, 1), observer);
  return std::move(out.front());
}

std::vector<SweepRow> sweep_horizon(NoisePredictor& predictor, std::span<const Image2D> coarse,
                                    std::span<const Image2D> boundaries,
                                    std::span<const Image2D> references,
                                    std::vector<int> horizons, SamplerConfig config,
                                    const AlphaSchedule& schedule, const SweepOptions& options) {
  if (references.size() != coarse.size()) {
    throw Error(ErrorKind::PairingError, "sweep_horizon: reference count differs from inputs");
  }
  for (int hz : horizons) {
    if (hz > schedule.total_steps()) {
      throw Error(ErrorKind::HorizonTooLarge, "sweep horizon " + std::to_string(hz));
    }
  }
  std::sort(horizons.begin(), horizons.end());
  std::vector<std::uint64_t> seeds(coarse.size());
  for (std::size_t i = 0; i < seeds.size(); ++i) seeds[i] = derive_seed(options.seed, i);

  std::vector<SweepRow> rows;
  for (int hz : horizons) {
    config.horizon = hz;
    const auto outputs = sample_batch(predictor, coarse, boundaries, config, schedule, seeds);
    std::vector<double> s, p;
    for (std::size_t i = 0; i < outputs.size(); ++i) {
      s.push_back(ssim(outputs[i], references[i], options.data_range));
      p.push_back(psnr(outputs[i], references[i], options.data_range));
    }
    SweepRow row{hz, mean_std(s).mean, mean_std(p).mean,
                 std::numeric_limits<double>::quiet_NaN()};
    if (outputs.size() >= 2 * static_cast<std::size_t>(options.feature_dim)) {
      row.frechet_proxy =
          fid_proxy(outputs, references, options.feature_dim, options.feature_seed).frechet;
    }
    rows.push_back(row);
  }
  return rows;
}

std::string sweep_csv(std::span<const SweepRow> rows) {
  std::ostringstream os;
  os.precision(6);
  os << std::fixed;
  os << "T_s,ssim,psnr,frechet_proxy\n";
  for (const auto& r : rows) {
    os << r.horizon << ',' << r.ssim << ',' << r.psnr << ',';
    if (std::isnan(r.frechet_proxy)) {
      os << "nan";
    } else {
      os << r.frechet_proxy;
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace fddm
