#pragma once

#include "fddm/image.hpp"

namespace fddm {

/// Two-level Laplacian pyramid.
///
/// detail1 is full resolution, detail2 half resolution, top quarter
/// resolution (the low-pass residual).
struct Pyramid2 {
  Image2D top;
  Image2D detail1;
  Image2D detail2;
};

/// Sobel gradient magnitude scaled to [0, 1] by its maximum. Replicate
/// padding. An image with no gradient maps to all zeros.
Image2D sobel_boundary(const Image2D& img);

/// Separable 5-tap binomial blur (1, 4, 6, 4, 1) / 16, replicate padding.
Image2D gaussian_blur(const Image2D& img);

/// Blur, then keep every second pixel starting at index 0.
/// Throws OddDimension for odd width or height.
Image2D downsample(const Image2D& img);

/// Zero insertion followed by the binomial kernel at gain 4.
///
/// The zero-inserted grid is mirrored (without repeating the edge sample)
/// at the borders, which keeps constants constant everywhere including the
/// last row and column.
Image2D upsample(const Image2D& img);

/// Throws OddDimension unless width and height are divisible by 4.
Pyramid2 laplacian_decompose(const Image2D& img);
Image2D laplacian_reconstruct(const Pyramid2& pyr);

/// Low frequencies (pyramid top) from low_src, detail bands from high_src:
///   U(U(top(low_src)) + detail2(high_src)) + detail1(high_src)
Image2D pyramid_fuse(const Image2D& high_src, const Image2D& low_src);

/// Exact 90 degree rotations. rotate_left(rotate_right(x)) == x.
Image2D rotate_left(const Image2D& img);
Image2D rotate_right(const Image2D& img);

}  // namespace fddm
