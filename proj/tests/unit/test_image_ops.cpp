#include <doctest.h>

#include <cmath>

#include "fddm/error.hpp"
#include "fddm/image_ops.hpp"
#include "helpers.hpp"

using namespace fddm;
using fddm::test::random_image;

namespace {

Image2D naive_blur(const Image2D& img) {
  return test::correlate(img, test::binomial5x5(), 5, test::replicate);
}

Image2D naive_sobel(const Image2D& img) {
  const std::vector<double> kx = {-1, 0, 1, -2, 0, 2, -1, 0, 1};
  const std::vector<double> ky = {-1, -2, -1, 0, 0, 0, 1, 2, 1};
  const Image2D gx = test::correlate(img, kx, 3, test::replicate);
  const Image2D gy = test::correlate(img, ky, 3, test::replicate);
  Image2D mag(img.width(), img.height());
  double hi = 0.0;
  for (std::size_t i = 0; i < mag.size(); ++i) {
    mag[i] = std::hypot(gx[i], gy[i]);
    hi = std::max(hi, mag[i]);
  }
  if (hi > 0.0) mag *= 1.0 / hi;
  return mag;
}

}  // namespace

TEST_CASE("sobel of a constant image is zero") {
  const Image2D b = sobel_boundary(Image2D(12, 12, 0.7));
  for (double v : b.pixels()) CHECK(v == 0.0);
}

TEST_CASE("sobel marks exactly the two columns beside a vertical step") {
  Image2D img(8, 8);
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) img.at(x, y) = x < 4 ? -1.0 : 1.0;
  }
  const Image2D b = sobel_boundary(img);
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) {
      if (x == 3 || x == 4) {
        CHECK(b.at(x, y) == doctest::Approx(1.0).epsilon(1e-12));
      } else {
        CHECK(b.at(x, y) == 0.0);
      }
    }
  }
}

TEST_CASE("sobel matches a direct convolution and stays in [0, 1]") {
  for (int i = 0; i < 100; ++i) {
    const Image2D img = random_image(16, 12, 900 + i);
    const Image2D b = sobel_boundary(img);
    CHECK(max_abs_diff(b, naive_sobel(img)) < 1e-12);
    for (double v : b.pixels()) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("sobel is translation covariant away from the border") {
  Image2D img = random_image(20, 20, 3, -0.01, 0.01);
  for (int y = 8; y < 12; ++y) {
    for (int x = 8; x < 12; ++x) img.at(x, y) = 1.0;
  }
  Image2D shifted(20, 20);
  for (int y = 0; y < 20; ++y) {
    for (int x = 0; x < 20; ++x) shifted.at(x, y) = img.at(std::max(0, x - 1), y);
  }
  const Image2D a = sobel_boundary(img);
  const Image2D b = sobel_boundary(shifted);
  for (int y = 2; y < 18; ++y) {
    for (int x = 2; x < 17; ++x) CHECK(b.at(x + 1, y) == doctest::Approx(a.at(x, y)).epsilon(1e-12));
  }
}

TEST_CASE("blur preserves constants and matches the direct 5x5 kernel") {
  const Image2D c = gaussian_blur(Image2D(9, 7, -0.3));
  for (double v : c.pixels()) CHECK(v == doctest::Approx(-0.3).epsilon(1e-14));

  Image2D impulse(9, 9);
  impulse.at(4, 4) = 1.0;
  CHECK(gaussian_blur(impulse).at(4, 4) == doctest::Approx(0.140625).epsilon(1e-15));

  for (int i = 0; i < 20; ++i) {
    const Image2D img = random_image(10, 14, 40 + i);
    CHECK(max_abs_diff(gaussian_blur(img), naive_blur(img)) < 1e-12);
  }
}

TEST_CASE("repeated blurs commute") {
  const Image2D a = random_image(16, 16, 1);
  const Image2D b = random_image(16, 16, 2);
  // blur(blur(a) + b) == blur(blur(a)) + blur(b) and blur^2 is a single operator.
  CHECK(max_abs_diff(gaussian_blur(gaussian_blur(a) + b),
                     gaussian_blur(gaussian_blur(a)) + gaussian_blur(b)) < 1e-12);
}

TEST_CASE("downsample of the 0..15 ramp equals blur then stride") {
  Image2D img(4, 4);
  for (int i = 0; i < 16; ++i) img[i] = i;
  const Image2D blurred = naive_blur(img);
  const Image2D d = downsample(img);
  REQUIRE(d.width() == 2);
  REQUIRE(d.height() == 2);
  CHECK(d.at(0, 0) == doctest::Approx(blurred.at(0, 0)));
  CHECK(d.at(1, 0) == doctest::Approx(blurred.at(2, 0)));
  CHECK(d.at(0, 1) == doctest::Approx(blurred.at(0, 2)));
  CHECK(d.at(1, 1) == doctest::Approx(blurred.at(2, 2)));
  // Hand-evaluated corner: rows/cols weighted (11, 4, 1)/16 about index 0.
  const double w0 = (11.0 * 0 + 4.0 * 1 + 1.0 * 2) / 16.0;
  CHECK(d.at(0, 0) == doctest::Approx(w0 + 4.0 * w0));

  const Image2D c = downsample(Image2D(8, 8, 2.5));
  for (double v : c.pixels()) CHECK(v == doctest::Approx(2.5));
  CHECK_THROWS_AS(downsample(Image2D(5, 4)), Error);
}

TEST_CASE("upsample of an impulse is the gain-4 kernel footprint") {
  Image2D img(2, 2);
  img.at(0, 0) = 1.0;
  const Image2D u = upsample(img);
  REQUIRE(u.width() == 4);
  // Zero insertion, mirrored borders, direct convolution.
  Image2D zeros(4, 4);
  zeros.at(0, 0) = 1.0;
  const Image2D oracle = test::correlate(zeros, test::binomial5x5(4.0), 5, test::reflect101);
  CHECK(max_abs_diff(u, oracle) < 1e-14);
  // Per axis: gain 2 times the taps (6, 4, 1, 0)/16 at distance 0..3.
  const double axis[4] = {0.75, 0.5, 0.125, 0.0};
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 4; ++x) CHECK(u.at(x, y) == doctest::Approx(axis[x] * axis[y]));
  }
}

TEST_CASE("upsample keeps constants and round trips them through downsample") {
  const Image2D u = upsample(Image2D(4, 4, 0.6));
  for (double v : u.pixels()) CHECK(v == doctest::Approx(0.6).epsilon(1e-14));
  const Image2D back = downsample(u);
  for (double v : back.pixels()) CHECK(v == doctest::Approx(0.6).epsilon(1e-14));
}

TEST_CASE("pyramid of a constant has empty detail bands") {
  const Pyramid2 p = laplacian_decompose(Image2D(16, 16, -0.4));
  for (double v : p.detail1.pixels()) CHECK(std::abs(v) < 1e-14);
  for (double v : p.detail2.pixels()) CHECK(std::abs(v) < 1e-14);
  for (double v : p.top.pixels()) CHECK(v == doctest::Approx(-0.4));
  CHECK(p.top.width() == 4);
  CHECK(p.detail2.width() == 8);
}

TEST_CASE("pyramid reconstruction is exact") {
  for (int i = 0; i < 100; ++i) {
    const Image2D img = random_image(16, 16, 7000 + i);
    CHECK(max_abs_diff(laplacian_reconstruct(laplacian_decompose(img)), img) < 1e-5);
  }
  const Image2D rect = random_image(24, 12, 5);
  CHECK(max_abs_diff(laplacian_reconstruct(laplacian_decompose(rect)), rect) < 1e-5);
  CHECK_THROWS_AS(laplacian_decompose(Image2D(18, 16)), Error);
}

TEST_CASE("checkerboard energy sits in the finest band") {
  const Pyramid2 p = laplacian_decompose(test::checkerboard(16));
  CHECK(test::energy(p.detail1) > test::energy(p.top));
}

TEST_CASE("fusion identities") {
  for (int i = 0; i < 20; ++i) {
    const Image2D x = random_image(16, 16, 300 + i);
    const Image2D y = random_image(16, 16, 400 + i);
    CHECK(max_abs_diff(pyramid_fuse(x, x), x) < 1e-5);
    const Image2D shifted = x + Image2D(16, 16, 0.35);
    CHECK(max_abs_diff(pyramid_fuse(x, shifted), shifted) < 1e-5);
    const double a = -1.7;
    CHECK(max_abs_diff(pyramid_fuse(a * x, a * y), a * pyramid_fuse(x, y)) < 1e-5);
  }
}

TEST_CASE("fusing a checkerboard with zero removes its low band") {
  const Image2D cb = test::checkerboard(16);
  const Pyramid2 p = laplacian_decompose(cb);
  const Image2D low_part = upsample(upsample(p.top));
  const Image2D fused = pyramid_fuse(cb, Image2D(16, 16));
  CHECK(max_abs_diff(fused, cb - low_part) < 1e-5);
}

TEST_CASE("rotations are exact inverses") {
  const Image2D img = random_image(6, 10, 11);
  const Image2D l = rotate_left(img);
  CHECK(l.width() == 10);
  CHECK(l.height() == 6);
  CHECK(rotate_right(l) == img);
  CHECK(rotate_left(rotate_right(img)) == img);
  CHECK(rotate_left(rotate_left(rotate_left(rotate_left(img)))) == img);
  // Top-right corner moves to top-left under a counter-clockwise turn.
  CHECK(l.at(0, 0) == img.at(5, 0));
}

TEST_CASE("image ops are deterministic") {
  const Image2D img = random_image(32, 32, 99);
  CHECK(pyramid_fuse(img, img) == pyramid_fuse(img, img));
  CHECK(sobel_boundary(img) == sobel_boundary(img));
}
