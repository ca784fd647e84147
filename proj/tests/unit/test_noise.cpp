#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "fddm/error.hpp"
#include "fddm/noise.hpp"
#include "helpers.hpp"

using namespace fddm;

namespace {

RadialPsd averaged_psd(NoiseKind kind, int n, int seeds) {
  RadialPsd avg;
  for (int s = 0; s < seeds; ++s) {
    const RadialPsd p = radial_psd(sample_noise(NoiseSpec{kind, n, n, static_cast<std::uint64_t>(s)}));
    if (avg.bins.empty()) {
      avg = p;
    } else {
      for (std::size_t i = 0; i < p.bins.size(); ++i) avg.bins[i].mean_power += p.bins[i].mean_power;
    }
  }
  for (auto& b : avg.bins) b.mean_power /= seeds;
  return avg;
}

double mean_low_power(const RadialPsd& p, double below) {
  double s = 0.0;
  int m = 0;
  for (const auto& b : p.bins) {
    if (b.frequency < below) {
      s += b.mean_power;
      ++m;
    }
  }
  return s / m;
}

}  // namespace

TEST_CASE("noise fields are reproducible per seed") {
  for (NoiseKind kind : {NoiseKind::gaussian, NoiseKind::blue}) {
    const NoiseSpec spec{kind, 32, 16, 1234};
    CHECK(sample_noise(spec) == sample_noise(spec));
    NoiseSpec other = spec;
    other.seed = 1235;
    CHECK_FALSE(sample_noise(spec) == sample_noise(other));
  }
}

TEST_CASE("blue noise is normalised exactly") {
  for (std::uint64_t seed : {0ULL, 1ULL, 77ULL}) {
    const Image2D n = sample_noise(NoiseSpec{NoiseKind::blue, 64, 64, seed});
    const double m = mean(n);
    double var = 0.0;
    for (double v : n.pixels()) var += (v - m) * (v - m);
    var /= static_cast<double>(n.size());
    CHECK(std::abs(m) < 1e-12);
    CHECK(var == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK_THROWS_AS(sample_noise(NoiseSpec{NoiseKind::blue, 4, 4, 0}), Error);
}

TEST_CASE("gaussian noise has unit moments") {
  const Image2D n = sample_noise(NoiseSpec{NoiseKind::gaussian, 128, 128, 5});
  const double m = mean(n);
  CHECK(std::abs(m) < 0.03);
  CHECK(sum_squares(n) / n.size() == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("spectral slopes: blue rises linearly, gaussian is flat") {
  const double blue = log_log_slope(averaged_psd(NoiseKind::blue, 64, 200), 0.05, 0.4);
  const double white = log_log_slope(averaged_psd(NoiseKind::gaussian, 64, 200), 0.05, 0.4);
  CHECK(blue == doctest::Approx(1.0).epsilon(0.15));
  CHECK(std::abs(white) < 0.15);
}

TEST_CASE("blue noise carries less low-frequency power than white noise") {
  const RadialPsd blue = averaged_psd(NoiseKind::blue, 64, 100);
  const RadialPsd white = averaged_psd(NoiseKind::gaussian, 64, 100);
  CHECK(mean_low_power(blue, 0.1) < mean_low_power(white, 0.1));
}

TEST_CASE("different seeds give uncorrelated fields") {
  double total = 0.0;
  for (int i = 0; i < 50; ++i) {
    const Image2D a = sample_noise(NoiseSpec{NoiseKind::blue, 64, 64, static_cast<std::uint64_t>(2 * i)});
    const Image2D b = sample_noise(NoiseSpec{NoiseKind::blue, 64, 64, static_cast<std::uint64_t>(2 * i + 1)});
    double dot = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) dot += a[k] * b[k];
    total += dot / static_cast<double>(a.size());
  }
  CHECK(std::abs(total / 50) < 0.1);
}

TEST_CASE("radial psd of a constant image is zero") {
  for (const auto& b : radial_psd(Image2D(32, 32, 0.8)).bins) CHECK(std::abs(b.mean_power) < 1e-20);
}

TEST_CASE("a horizontal sinusoid lands in a single bin") {
  const int n = 64;
  const int k0 = 8;
  Image2D img(n, n);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) img.at(x, y) = std::cos(2.0 * std::numbers::pi * k0 * x / n);
  }
  const RadialPsd p = radial_psd(img);
  std::size_t best = 0;
  for (std::size_t i = 1; i < p.bins.size(); ++i) {
    if (p.bins[i].mean_power > p.bins[best].mean_power) best = i;
  }
  CHECK(p.bins[best].frequency == doctest::Approx(static_cast<double>(k0) / n));
  for (std::size_t i = 0; i < p.bins.size(); ++i) {
    if (i != best) CHECK(p.bins[i].mean_power < 1e-18);
  }
}

TEST_CASE("periodogram matches a direct DFT and satisfies Parseval") {
  const int n = 16;
  const Image2D img = test::random_image(n, n, 4242);
  const auto power = periodogram(img);
  REQUIRE(power.size() == static_cast<std::size_t>(n * n));
  double spectral = 0.0;
  for (int ky = 0; ky < n; ++ky) {
    for (int kx = 0; kx < n; ++kx) {
      std::complex<double> acc = 0.0;
      for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
          const double ang = -2.0 * std::numbers::pi * (static_cast<double>(kx * x) / n +
                                                         static_cast<double>(ky * y) / n);
          acc += img.at(x, y) * std::polar(1.0, ang);
        }
      }
      const double direct = std::norm(acc) / (n * n);
      CHECK(power[ky * n + kx] == doctest::Approx(direct).epsilon(1e-9));
      spectral += power[ky * n + kx];
    }
  }
  // Mean periodogram value equals the spatial energy per pixel.
  CHECK(spectral / (n * n) == doctest::Approx(sum_squares(img) / (n * n)).epsilon(1e-12));
}

TEST_CASE("radial psd argument checks") {
  CHECK_THROWS_AS(radial_psd(Image2D(32, 16)), Error);
  CHECK_THROWS_AS(radial_psd(Image2D(8, 8)), Error);
  const RadialPsd p = radial_psd(test::random_image(32, 32, 1));
  for (std::size_t i = 1; i < p.bins.size(); ++i) CHECK(p.bins[i].frequency > p.bins[i - 1].frequency);
  CHECK(p.bins.back().frequency <= 0.5);
}
