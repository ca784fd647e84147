#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fddm/image.hpp"

namespace fddm {

/// Mean structural similarity over all fully contained 11x11 Gaussian
/// windows (sigma 1.5), C1 = (0.01 R)^2, C2 = (0.03 R)^2. Images must be at
/// least 11x11. Throws DimensionMismatch.
double ssim(const Image2D& a, const Image2D& b, double data_range = 2.0);

/// Value reported when the two images are identical.
inline constexpr double kPsnrCap = 99.0;

/// 10 log10(R^2 / MSE), capped at kPsnrCap. Throws DimensionMismatch.
double psnr(const Image2D& a, const Image2D& b, double data_range = 2.0);

/// Gaussian summary of a feature cloud. covariance is k*k row-major.
struct FeatureStats {
  std::vector<double> mean;
  std::vector<double> covariance;
  std::size_t sample_count = 0;

  std::size_t dim() const noexcept { return mean.size(); }
};

/// Mean and unbiased covariance. Throws TooFewSamples for fewer than two rows.
FeatureStats fit_feature_stats(std::span<const std::vector<double>> features);

/// |mu_p - mu_q|^2 + tr(S_p + S_q - 2 (S_p S_q)^{1/2}), the matrix root taken
/// through the symmetric form S_p^{1/2} S_q S_p^{1/2} with eigenvalues clamped
/// at zero. Throws DimensionMismatch, NotPsd.
double frechet_distance(const FeatureStats& p, const FeatureStats& q);

/// Fixed random three-layer convolutional feature map with global average
/// pooling; a stand-in for a pretrained classifier's embedding.
class FeatureExtractor {
 public:
  FeatureExtractor(int feature_dim, std::uint64_t seed);
  ~FeatureExtractor();
  FeatureExtractor(FeatureExtractor&&) noexcept;
  FeatureExtractor& operator=(FeatureExtractor&&) noexcept;

  int feature_dim() const noexcept { return feature_dim_; }
  std::vector<std::vector<double>> extract(std::span<const Image2D> images) const;

 private:
  struct Impl;
  int feature_dim_;
  std::unique_ptr<Impl> impl_;
};

struct FidProxyResult {
  double frechet = 0.0;
  /// Mean per-image squared feature difference, when the sets are paired.
  std::optional<double> paired_feature_mse;
};

/// Frechet distance between the feature statistics of two image sets.
/// Each set needs at least 2 * feature_dim images (TooFewSamples).
FidProxyResult fid_proxy(std::span<const Image2D> images_a, std::span<const Image2D> images_b,
                         int feature_dim, std::uint64_t feature_seed, bool paired = false);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};
/// Sample mean and population standard deviation.
MeanStd mean_std(std::span<const double> values);
/// "0.9144 ± 0.0379" layout: four decimals each.
std::string format_mean_std(const MeanStd& v);

}  // namespace fddm
