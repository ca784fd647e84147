#include "fddm/image_ops.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "fddm/error.hpp"

namespace fddm {

namespace {

constexpr std::array<double, 5> kBinomial = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};

int clamp_index(int i, int n) { return std::clamp(i, 0, n - 1); }

// Reflect-101: ... 2 1 | 0 1 2 ... n-1 | n-2 n-3 ...
int mirror_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

template <typename IndexFn>
Image2D separable_filter(const Image2D& img, const std::array<double, 5>& k, double gain,
                         IndexFn index) {
  const int w = img.width();
  const int h = img.height();
  Image2D tmp(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int d = -2; d <= 2; ++d) acc += k[d + 2] * img.at(index(x + d, w), y);
      tmp.at(x, y) = gain * acc;
    }
  }
  Image2D out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int d = -2; d <= 2; ++d) acc += k[d + 2] * tmp.at(x, index(y + d, h));
      out.at(x, y) = gain * acc;
    }
  }
  return out;
}

void require_divisible_by_4(const Image2D& img, const char* what) {
  if (img.width() % 4 != 0 || img.height() % 4 != 0) {
    throw Error(ErrorKind::OddDimension, std::string(what) + ": dimensions " +
                                             std::to_string(img.width()) + "x" +
                                             std::to_string(img.height()) +
                                             " are not divisible by 4");
  }
}

}  // namespace

Image2D sobel_boundary(const Image2D& img) {
  const int w = img.width();
  const int h = img.height();
  Image2D mag(w, h);
  auto px = [&](int x, int y) { return img.at(clamp_index(x, w), clamp_index(y, h)); };
  double peak = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double gx = (px(x + 1, y - 1) + 2.0 * px(x + 1, y) + px(x + 1, y + 1)) -
                        (px(x - 1, y - 1) + 2.0 * px(x - 1, y) + px(x - 1, y + 1));
      const double gy = (px(x - 1, y + 1) + 2.0 * px(x, y + 1) + px(x + 1, y + 1)) -
                        (px(x - 1, y - 1) + 2.0 * px(x, y - 1) + px(x + 1, y - 1));
      const double m = std::sqrt(gx * gx + gy * gy);
      mag.at(x, y) = m;
      peak = std::max(peak, m);
    }
  }
  if (peak > 0.0) {
    for (double& v : mag.pixels()) v /= peak;
  }
  return mag;
}

Image2D gaussian_blur(const Image2D& img) {
  return separable_filter(img, kBinomial, 1.0, clamp_index);
}

Image2D downsample(const Image2D& img) {
  if (img.width() % 2 != 0 || img.height() % 2 != 0) {
    throw Error(ErrorKind::OddDimension, "downsample: dimensions " + std::to_string(img.width()) +
                                             "x" + std::to_string(img.height()) +
                                             " must be even");
  }
  const Image2D blurred = gaussian_blur(img);
  Image2D out(img.width() / 2, img.height() / 2);
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) out.at(x, y) = blurred.at(2 * x, 2 * y);
  }
  return out;
}

Image2D upsample(const Image2D& img) {
  Image2D zeros(2 * img.width(), 2 * img.height());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) zeros.at(2 * x, 2 * y) = img.at(x, y);
  }
  // Gain 2 per axis = 4 overall.
  return separable_filter(zeros, kBinomial, 2.0, mirror_index);
}

Pyramid2 laplacian_decompose(const Image2D& img) {
  require_divisible_by_4(img, "laplacian_decompose");
  Pyramid2 pyr;
  Image2D level1 = downsample(img);
  pyr.detail1 = img - upsample(level1);
  pyr.top = downsample(level1);
  pyr.detail2 = level1 - upsample(pyr.top);
  return pyr;
}

Image2D laplacian_reconstruct(const Pyramid2& pyr) {
  Image2D level1 = upsample(pyr.top);
  level1 += pyr.detail2;
  Image2D out = upsample(level1);
  out += pyr.detail1;
  return out;
}

Image2D pyramid_fuse(const Image2D& high_src, const Image2D& low_src) {
  require_same_shape(high_src, low_src, "pyramid_fuse");
  const Pyramid2 high = laplacian_decompose(high_src);
  const Pyramid2 low = laplacian_decompose(low_src);
  return laplacian_reconstruct(Pyramid2{low.top, high.detail1, high.detail2});
}

Image2D rotate_left(const Image2D& img) {
  // Counter-clockwise: out(x, y) = in(w - 1 - y, x), out dims (h, w).
  const int w = img.width();
  const int h = img.height();
  Image2D out(h, w);
  for (int y = 0; y < w; ++y) {
    for (int x = 0; x < h; ++x) out.at(x, y) = img.at(w - 1 - y, x);
  }
  return out;
}

Image2D rotate_right(const Image2D& img) {
  const int w = img.width();
  const int h = img.height();
  Image2D out(h, w);
  for (int y = 0; y < w; ++y) {
    for (int x = 0; x < h; ++x) out.at(x, y) = img.at(y, h - 1 - x);
  }
  return out;
}

}  // namespace fddm
