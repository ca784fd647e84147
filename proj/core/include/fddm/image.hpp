#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace fddm {

/// Single-channel raster, row-major, double precision.
///
/// Carries every image-shaped quantity in the pipeline: modality slices,
/// Sobel boundaries, noise fields and intermediate sampler states.
class Image2D {
 public:
  Image2D() = default;
  Image2D(int width, int height, double fill = 0.0);
  Image2D(int width, int height, std::vector<double> pixels);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return pixels_.size(); }
  bool empty() const noexcept { return pixels_.empty(); }

  double& at(int x, int y) { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }
  double at(int x, int y) const { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }

  double& operator[](std::size_t i) { return pixels_[i]; }
  double operator[](std::size_t i) const { return pixels_[i]; }

  std::span<double> pixels() noexcept { return pixels_; }
  std::span<const double> pixels() const noexcept { return pixels_; }

  bool same_shape(const Image2D& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }
  bool all_finite() const noexcept;

  Image2D& operator+=(const Image2D& rhs);
  Image2D& operator-=(const Image2D& rhs);
  Image2D& operator*=(double s);

  friend bool operator==(const Image2D&, const Image2D&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> pixels_;
};

Image2D operator+(Image2D lhs, const Image2D& rhs);
Image2D operator-(Image2D lhs, const Image2D& rhs);
Image2D operator*(double s, Image2D img);

/// a * x + b * y, elementwise. Throws DimensionMismatch.
Image2D axpby(double a, const Image2D& x, double b, const Image2D& y);

double max_abs_diff(const Image2D& a, const Image2D& b);
double sum_squares(const Image2D& img);
double mean(const Image2D& img);

/// Throws DimensionMismatch unless shapes agree.
void require_same_shape(const Image2D& a, const Image2D& b, const char* what);
/// Throws NotFinite when any pixel is NaN or infinite.
void require_finite(const Image2D& img, const char* what);

}  // namespace fddm
