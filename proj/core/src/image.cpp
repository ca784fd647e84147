#include "fddm/image.hpp"

#include <cmath>
#include <string>

#include "fddm/error.hpp"

namespace fddm {

namespace {

void check_dims(int width, int height) {
  if (width <= 0 || height <= 0) {
    throw Error(ErrorKind::BadSize, "image dimensions must be positive, got " +
                                        std::to_string(width) + "x" + std::to_string(height));
  }
}

}  // namespace

Image2D::Image2D(int width, int height, double fill)
    : width_(width), height_(height) {
  check_dims(width, height);
  pixels_.assign(static_cast<std::size_t>(width) * height, fill);
}

Image2D::Image2D(int width, int height, std::vector<double> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  check_dims(width, height);
  if (pixels_.size() != static_cast<std::size_t>(width) * height) {
    throw Error(ErrorKind::DimensionMismatch, "pixel count does not match width*height");
  }
}

bool Image2D::all_finite() const noexcept {
  for (double v : pixels_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Image2D& Image2D::operator+=(const Image2D& rhs) {
  require_same_shape(*this, rhs, "operator+=");
  for (std::size_t i = 0; i < pixels_.size(); ++i) pixels_[i] += rhs.pixels_[i];
  return *this;
}

Image2D& Image2D::operator-=(const Image2D& rhs) {
  require_same_shape(*this, rhs, "operator-=");
  for (std::size_t i = 0; i < pixels_.size(); ++i) pixels_[i] -= rhs.pixels_[i];
  return *this;
}

Image2D& Image2D::operator*=(double s) {
  for (double& v : pixels_) v *= s;
  return *this;
}

Image2D operator+(Image2D lhs, const Image2D& rhs) { return lhs += rhs; }
Image2D operator-(Image2D lhs, const Image2D& rhs) { return lhs -= rhs; }
Image2D operator*(double s, Image2D img) { return img *= s; }

Image2D axpby(double a, const Image2D& x, double b, const Image2D& y) {
  require_same_shape(x, y, "axpby");
  Image2D out(x.width(), x.height());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * x[i] + b * y[i];
  return out;
}

double max_abs_diff(const Image2D& a, const Image2D& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double sum_squares(const Image2D& img) {
  double s = 0.0;
  for (double v : img.pixels()) s += v * v;
  return s;
}

double mean(const Image2D& img) {
  double s = 0.0;
  for (double v : img.pixels()) s += v;
  return img.empty() ? 0.0 : s / static_cast<double>(img.size());
}

void require_same_shape(const Image2D& a, const Image2D& b, const char* what) {
  if (!a.same_shape(b)) {
    throw Error(ErrorKind::DimensionMismatch,
                std::string(what) + ": " + std::to_string(a.width()) + "x" +
                    std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                    std::to_string(b.height()));
  }
}

void require_finite(const Image2D& img, const char* what) {
  if (!img.all_finite()) {
    throw Error(ErrorKind::NotFinite, std::string(what) + ": image contains NaN or Inf");
  }
}

}  // namespace fddm
