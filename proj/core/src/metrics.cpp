#include "fddm/metrics.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdio>
#include <string>

#include "fddm/error.hpp"
#include "fddm/nn/convert.hpp"
#include "fddm/nn/layers.hpp"
#include "fddm/rng.hpp"

namespace fddm {

namespace {

constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;

std::vector<double> gaussian_window() {
  std::vector<double> w(kSsimWindow);
  double sum = 0.0;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double d = i - kSsimWindow / 2;
    w[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
    sum += w[i];
  }
  for (double& v : w) v /= sum;
  return w;
}

// Separable "valid" filtering: output (w - 10) x (h - 10).
std::vector<double> filter_valid(const std::vector<double>& src, int w, int h,
                                 const std::vector<double>& k) {
  const int ow = w - kSsimWindow + 1;
  const int oh = h - kSsimWindow + 1;
  std::vector<double> tmp(static_cast<std::size_t>(ow) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int i = 0; i < kSsimWindow; ++i) acc += k[i] * src[static_cast<std::size_t>(y) * w + x + i];
      tmp[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(ow) * oh);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int i = 0; i < kSsimWindow; ++i) acc += k[i] * tmp[static_cast<std::size_t>(y + i) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  }
  return out;
}

Eigen::MatrixXd as_matrix(const FeatureStats& s) {
  const auto k = static_cast<Eigen::Index>(s.dim());
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      s.covariance.data(), k, k);
}

void require_psd(const Eigen::MatrixXd& m, const char* which) {
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-8) {
    throw Error(ErrorKind::NotPsd, std::string(which) + " covariance is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-8) {
    throw Error(ErrorKind::NotPsd, std::string(which) + " covariance has a negative eigenvalue");
  }
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

double ssim(const Image2D& a, const Image2D& b, double data_range) {
  require_same_shape(a, b, "ssim");
  const int w = a.width();
  const int h = a.height();
  if (w < kSsimWindow || h < kSsimWindow) {
    throw Error(ErrorKind::TooSmall, "ssim needs images of at least 11x11");
  }
  const double c1 = std::pow(0.01 * data_range, 2);
  const double c2 = std::pow(0.03 * data_range, 2);
  const auto k = gaussian_window();
  std::vector<double> x(a.pixels().begin(), a.pixels().end());
  std::vector<double> y(b.pixels().begin(), b.pixels().end());
  std::vector<double> xx(x.size()), yy(x.size()), xy(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  const auto mx = filter_valid(x, w, h, k);
  const auto my = filter_valid(y, w, h, k);
  const auto mxx = filter_valid(xx, w, h, k);
  const auto myy = filter_valid(yy, w, h, k);
  const auto mxy = filter_valid(xy, w, h, k);
  double total = 0.0;
  for (std::size_t i = 0; i < mx.size(); ++i) {
    const double vx = mxx[i] - mx[i] * mx[i];
    const double vy = myy[i] - my[i] * my[i];
    const double cov = mxy[i] - mx[i] * my[i];
    total += ((2.0 * mx[i] * my[i] + c1) * (2.0 * cov + c2)) /
             ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
  }
  return total / static_cast<double>(mx.size());
}

double psnr(const Image2D& a, const Image2D& b, double data_range) {
  require_same_shape(a, b, "psnr");
  if (!(data_range > 0.0)) throw Error(ErrorKind::RangeViolation, "psnr: range must be > 0");
  double se = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) se += (a[i] - b[i]) * (a[i] - b[i]);
  const double mse = se / static_cast<double>(a.size());
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(data_range * data_range / mse));
}

FeatureStats fit_feature_stats(std::span<const std::vector<double>> features) {
  if (features.size() < 2) {
    throw Error(ErrorKind::TooFewSamples, "feature statistics need at least two samples");
  }
  const std::size_t k = features.front().size();
  FeatureStats s;
  s.sample_count = features.size();
  s.mean.assign(k, 0.0);
  for (const auto& f : features) {
    if (f.size() != k) throw Error(ErrorKind::DimensionMismatch, "ragged feature rows");
    for (std::size_t i = 0; i < k; ++i) s.mean[i] += f[i];
  }
  for (double& m : s.mean) m /= static_cast<double>(features.size());
  s.covariance.assign(k * k, 0.0);
  for (const auto& f : features) {
    for (std::size_t i = 0; i < k; ++i) {
      const double di = f[i] - s.mean[i];
      for (std::size_t j = i; j < k; ++j) s.covariance[i * k + j] += di * (f[j] - s.mean[j]);
    }
  }
  const double denom = static_cast<double>(features.size() - 1);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i; j < k; ++j) {
      s.covariance[i * k + j] /= denom;
      s.covariance[j * k + i] = s.covariance[i * k + j];
    }
  }
  return s;
}

double frechet_distance(const FeatureStats& p, const FeatureStats& q) {
  if (p.dim() != q.dim() || p.covariance.size() != p.dim() * p.dim() ||
      q.covariance.size() != q.dim() * q.dim()) {
    throw Error(ErrorKind::DimensionMismatch, "frechet_distance: feature dimensions differ");
  }
  const Eigen::MatrixXd sp = as_matrix(p);
  const Eigen::MatrixXd sq = as_matrix(q);
  require_psd(sp, "first");
  require_psd(sq, "second");
  double mean_term = 0.0;
  for (std::size_t i = 0; i < p.dim(); ++i) mean_term += std::pow(p.mean[i] - q.mean[i], 2);
  const Eigen::MatrixXd root_p = psd_sqrt(sp);
  Eigen::MatrixXd inner = root_p * sq * root_p;
  inner = 0.5 * (inner + inner.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(inner, Eigen::EigenvaluesOnly);
  const double cross = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  const double d = mean_term + sp.trace() + sq.trace() - 2.0 * cross;
  return std::max(0.0, d);
}

struct FeatureExtractor::Impl {
  nn::ParamSet params;
  nn::Conv2d conv1, conv2, conv3;
};

FeatureExtractor::FeatureExtractor(int feature_dim, std::uint64_t seed)
    : feature_dim_(feature_dim), impl_(std::make_unique<Impl>()) {
  if (feature_dim <= 0) throw Error(ErrorKind::ConfigError, "feature_dim must be positive");
  Rng rng(seed);
  impl_->conv1 = nn::Conv2d(impl_->params, "f1", 1, 16, 3, 2, rng);
  impl_->conv2 = nn::Conv2d(impl_->params, "f2", 16, 32, 3, 2, rng);
  impl_->conv3 = nn::Conv2d(impl_->params, "f3", 32, feature_dim, 3, 1, rng);
}

FeatureExtractor::~FeatureExtractor() = default;
FeatureExtractor::FeatureExtractor(FeatureExtractor&&) noexcept = default;
FeatureExtractor& FeatureExtractor::operator=(FeatureExtractor&&) noexcept = default;

std::vector<std::vector<double>> FeatureExtractor::extract(std::span<const Image2D> images) const {
  std::vector<std::vector<double>> out;
  out.reserve(images.size());
  nn::NoGradGuard no_grad;
  for (const Image2D& img : images) {
    nn::Var x = nn::constant(nn::stack_images(std::span<const Image2D>(&img, 1)));
    nn::Var f = impl_->conv3(nn::relu(impl_->conv2(nn::relu(impl_->conv1(x)))));
    const nn::Shape s = f->shape();
    std::vector<double> pooled(static_cast<std::size_t>(s.c), 0.0);
    for (int c = 0; c < s.c; ++c) {
      const float* ch = f->value.channel(0, c);
      double acc = 0.0;
      for (std::size_t i = 0; i < s.plane(); ++i) acc += ch[i];
      pooled[static_cast<std::size_t>(c)] = acc / static_cast<double>(s.plane());
    }
    out.push_back(std::move(pooled));
  }
  return out;
}

FidProxyResult fid_proxy(std::span<const Image2D> images_a, std::span<const Image2D> images_b,
                         int feature_dim, std::uint64_t feature_seed, bool paired) {
  const std::size_t needed = 2 * static_cast<std::size_t>(feature_dim);
  if (images_a.size() < needed || images_b.size() < needed) {
    throw Error(ErrorKind::TooFewSamples,
                "fid_proxy needs at least " + std::to_string(needed) + " images per set, got " +
                    std::to_string(images_a.size()) + " and " + std::to_string(images_b.size()));
  }
  const FeatureExtractor extractor(feature_dim, feature_seed);
  const auto fa = extractor.extract(images_a);
  const auto fb = extractor.extract(images_b);
  FidProxyResult result;
  result.frechet = frechet_distance(fit_feature_stats(fa), fit_feature_stats(fb));
  if (paired) {
    if (fa.size() != fb.size()) {
      throw Error(ErrorKind::PairingError, "paired feature MSE needs equally sized sets");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < fa.size(); ++i) {
      double se = 0.0;
      for (std::size_t j = 0; j < fa[i].size(); ++j) se += std::pow(fa[i][j] - fb[i][j], 2);
      total += se / static_cast<double>(fa[i].size());
    }
    result.paired_feature_mse = total / static_cast<double>(fa.size());
  }
  return result;
}

MeanStd mean_std(std::span<const double> values) {
  MeanStd r;
  if (values.empty()) return r;
  for (double v : values) r.mean += v;
  r.mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - r.mean) * (v - r.mean);
  r.std = std::sqrt(ss / static_cast<double>(values.size()));
  return r;
}

std::string format_mean_std(const MeanStd& v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f \xC2\xB1 %.4f", v.mean, v.std);
  return buf;
}

}  // namespace fddm
