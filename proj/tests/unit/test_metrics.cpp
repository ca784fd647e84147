#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "fddm/error.hpp"
#include "fddm/metrics.hpp"
#include "helpers.hpp"

using namespace fddm;

namespace {

// Straightforward per-window evaluation, one window at a time.
double naive_ssim(const Image2D& a, const Image2D& b, double range) {
  double g[11];
  double gs = 0.0;
  for (int i = 0; i < 11; ++i) {
    g[i] = std::exp(-((i - 5) * (i - 5)) / (2.0 * 1.5 * 1.5));
    gs += g[i];
  }
  const double c1 = (0.01 * range) * (0.01 * range);
  const double c2 = (0.03 * range) * (0.03 * range);
  double total = 0.0;
  int windows = 0;
  for (int y0 = 0; y0 + 11 <= a.height(); ++y0) {
    for (int x0 = 0; x0 + 11 <= a.width(); ++x0) {
      double mx = 0, my = 0;
      for (int dy = 0; dy < 11; ++dy) {
        for (int dx = 0; dx < 11; ++dx) {
          const double w = g[dy] * g[dx] / (gs * gs);
          mx += w * a.at(x0 + dx, y0 + dy);
          my += w * b.at(x0 + dx, y0 + dy);
        }
      }
      double vx = 0, vy = 0, cov = 0;
      for (int dy = 0; dy < 11; ++dy) {
        for (int dx = 0; dx < 11; ++dx) {
          const double w = g[dy] * g[dx] / (gs * gs);
          const double ex = a.at(x0 + dx, y0 + dy) - mx;
          const double ey = b.at(x0 + dx, y0 + dy) - my;
          vx += w * ex * ex;
          vy += w * ey * ey;
          cov += w * ex * ey;
        }
      }
      total += ((2 * mx * my + c1) * (2 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
      ++windows;
    }
  }
  return total / windows;
}

double naive_psnr(const Image2D& a, const Image2D& b, double range) {
  double se = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) se += (a[i] - b[i]) * (a[i] - b[i]);
  const double mse = se / static_cast<double>(a.size());
  return mse == 0.0 ? 99.0 : 10.0 * std::log10(range * range / mse);
}

FeatureStats scalar_stats(double mean, double var) {
  return FeatureStats{{mean}, {var}, 10};
}

std::vector<Image2D> image_set(int count, std::uint64_t seed) {
  std::vector<Image2D> out;
  for (int i = 0; i < count; ++i) {
    Image2D img = test::random_image(16, 16, seed + i, -0.3, 0.3);
    for (int y = 4; y < 12; ++y) {
      for (int x = 4; x < 12; ++x) img.at(x, y) += 0.5;
    }
    out.push_back(std::move(img));
  }
  return out;
}

}  // namespace

TEST_CASE("ssim and psnr agree with direct evaluation") {
  for (int i = 0; i < 20; ++i) {
    const Image2D a = test::random_image(24, 20, 100 + i);
    Image2D b = a;
    const Image2D n = test::random_image(24, 20, 200 + i, -0.3, 0.3);
    b += n;
    CHECK(ssim(a, b) == doctest::Approx(naive_ssim(a, b, 2.0)).epsilon(1e-4));
    CHECK(psnr(a, b) == doctest::Approx(naive_psnr(a, b, 2.0)).epsilon(1e-4));
    CHECK(ssim(a, b, 1.0) == doctest::Approx(naive_ssim(a, b, 1.0)).epsilon(1e-4));
  }
}

TEST_CASE("ssim identities") {
  Image2D x = test::random_image(32, 32, 1);
  const double m = mean(x);
  for (double& v : x.pixels()) v -= m;
  CHECK(ssim(x, x) == doctest::Approx(1.0).epsilon(1e-12));
  // Same luminance, inverted structure.
  CHECK(ssim(Image2D(32, 32, 0.5) + x, Image2D(32, 32, 0.5) - x) < 0.0);
  const Image2D y = test::random_image(32, 32, 2);
  CHECK(std::abs(ssim(x, y) - ssim(y, x)) < 1e-10);
  CHECK(ssim(x, y) >= -1.0);
  CHECK(ssim(x, y) <= 1.0);
  CHECK_THROWS_AS(ssim(Image2D(10, 10), Image2D(10, 10)), Error);
  CHECK_THROWS_AS(ssim(Image2D(16, 16), Image2D(16, 12)), Error);
}

TEST_CASE("psnr closed forms and monotonicity") {
  const Image2D a(8, 8, 0.0);
  const Image2D b(8, 8, 1.0);
  CHECK(psnr(a, b, 2.0) == doctest::Approx(6.0206).epsilon(1e-4 / 6.0206));
  CHECK(psnr(a, a) == 99.0);
  const Image2D base = test::random_image(32, 32, 3);
  double previous = 1e9;
  for (double sigma : {0.01, 0.05, 0.1, 0.3, 0.6}) {
    Rng rng(4);
    Image2D noisy = base;
    for (double& v : noisy.pixels()) v += sigma * rng.normal();
    const double p = psnr(base, noisy);
    CHECK(p < previous);
    previous = p;
  }
  CHECK_THROWS_AS(psnr(a, b, 0.0), Error);
}

TEST_CASE("frechet distance closed forms") {
  CHECK(frechet_distance(scalar_stats(0, 1), scalar_stats(1, 1)) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(frechet_distance(scalar_stats(0, 1), scalar_stats(0, 4)) == doctest::Approx(1.0).epsilon(1e-10));

  // Diagonal covariances reduce to a sum of scalar terms.
  FeatureStats p{{0.5, -1.0, 2.0}, {1, 0, 0, 0, 4, 0, 0, 0, 0.25}, 20};
  FeatureStats q{{0.0, 1.0, 2.0}, {9, 0, 0, 0, 1, 0, 0, 0, 1}, 20};
  const double expected = 0.25 + 4.0 + 0.0 + (1 - 3) * (1 - 3) + (2 - 1) * (2 - 1) + (0.5 - 1) * (0.5 - 1);
  CHECK(frechet_distance(p, q) == doctest::Approx(expected).epsilon(1e-9));
  CHECK(frechet_distance(p, q) == doctest::Approx(frechet_distance(q, p)).epsilon(1e-9));
  CHECK(std::abs(frechet_distance(p, p)) < 1e-8);

  FeatureStats bad = p;
  bad.covariance[0] = -5.0;
  CHECK_THROWS_AS(frechet_distance(bad, q), Error);
  CHECK_THROWS_AS(frechet_distance(p, scalar_stats(0, 1)), Error);
}

TEST_CASE("frechet distance of a rotated, correlated pair") {
  // Full covariances from sampled features; identical clouds give zero.
  Rng rng(6);
  std::vector<std::vector<double>> f;
  for (int i = 0; i < 200; ++i) {
    const double u = rng.normal();
    f.push_back({u, 0.5 * u + rng.normal(), rng.normal()});
  }
  const FeatureStats s = fit_feature_stats(f);
  CHECK(s.sample_count == 200);
  CHECK(std::abs(frechet_distance(s, s)) < 1e-8);
  CHECK(s.covariance[1] == doctest::Approx(s.covariance[3]));
  CHECK_THROWS_AS(fit_feature_stats(std::vector<std::vector<double>>{{1.0}}), Error);
}

TEST_CASE("fid proxy properties") {
  const auto a = image_set(20, 10);
  CHECK(std::abs(fid_proxy(a, a, 8, 3).frechet) < 1e-6);

  auto noisy = a;
  Rng rng(7);
  for (auto& img : noisy) {
    for (double& v : img.pixels()) v += 0.8 * rng.normal();
  }
  CHECK(fid_proxy(a, noisy, 8, 3).frechet > fid_proxy(a, a, 8, 3).frechet);

  auto shuffled = noisy;
  std::reverse(shuffled.begin(), shuffled.end());
  std::swap(shuffled[0], shuffled[7]);
  CHECK(fid_proxy(a, shuffled, 8, 3).frechet == doctest::Approx(fid_proxy(a, noisy, 8, 3).frechet).epsilon(1e-9));
  CHECK(fid_proxy(a, noisy, 8, 3).frechet == fid_proxy(a, noisy, 8, 3).frechet);

  const FidProxyResult paired = fid_proxy(a, noisy, 8, 3, true);
  REQUIRE(paired.paired_feature_mse.has_value());
  CHECK(*paired.paired_feature_mse > 0.0);
  CHECK_FALSE(fid_proxy(a, noisy, 8, 3).paired_feature_mse.has_value());

  CHECK_THROWS_AS(fid_proxy(image_set(5, 1), image_set(5, 2), 8, 3), Error);
}

TEST_CASE("feature extractor is fixed by its seed") {
  const auto a = image_set(3, 40);
  const FeatureExtractor f1(6, 11);
  const FeatureExtractor f2(6, 11);
  const FeatureExtractor f3(6, 12);
  CHECK(f1.extract(a) == f2.extract(a));
  CHECK_FALSE(f1.extract(a) == f3.extract(a));
  CHECK(f1.extract(a).front().size() == 6);
}

TEST_CASE("summary formatting") {
  const std::vector<double> v = {0.9, 0.95, 0.85, 0.9};
  const MeanStd m = mean_std(v);
  CHECK(m.mean == doctest::Approx(0.9));
  CHECK(m.std == doctest::Approx(std::sqrt(0.005 / 4)));
  CHECK(format_mean_std(MeanStd{0.91444, 0.03791}) == "0.9144 ± 0.0379");
}
