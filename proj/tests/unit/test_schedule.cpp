#include <doctest.h>

#include <cmath>

#include "fddm/error.hpp"
#include "fddm/noise.hpp"
#include "fddm/schedule.hpp"
#include "helpers.hpp"

using namespace fddm;

TEST_CASE("linear beta schedule") {
  const AlphaSchedule s = make_schedule(1000);
  CHECK(s.total_steps() == 1000);
  CHECK(s.alpha_bar(0) == 1.0);
  // Independent running product.
  double prod = 1.0;
  for (int t = 1; t <= 1000; ++t) {
    prod *= 1.0 - (1e-4 + (0.02 - 1e-4) * (t - 1) / 999.0);
    CHECK(s.alpha_bar(t) == doctest::Approx(prod).epsilon(1e-12));
    if (t > 1) CHECK(s.alpha_bar(t) < s.alpha_bar(t - 1));
  }
  CHECK(s.alpha_bar(1000) < 1e-3);
  CHECK(make_schedule(2).alpha_bar(1) == doctest::Approx(0.9999).epsilon(1e-15));
  for (int n : {2, 10, 100, 1000}) {
    const AlphaSchedule m = make_schedule(n);
    for (int t = 1; t <= n; ++t) {
      CHECK(m.alpha_bar(t) > 0.0);
      CHECK(m.alpha_bar(t) < m.alpha_bar(t - 1));
    }
  }
  CHECK_THROWS_AS(make_schedule(1), Error);
  CHECK_THROWS_AS(AlphaSchedule({0.9, 0.95}), Error);
  CHECK_THROWS_AS(s.alpha_bar(1001), Error);
}

TEST_CASE("forward diffusion limits and linearity") {
  const AlphaSchedule s = make_schedule(1000);
  const Image2D x = test::random_image(16, 16, 1);
  const Image2D n = test::random_image(16, 16, 2);
  const int t = 400;
  const double a = s.alpha_bar(t);
  CHECK(max_abs_diff(forward_diffuse(x, t, s, Image2D(16, 16)), std::sqrt(a) * x) == 0.0);
  CHECK(max_abs_diff(forward_diffuse(Image2D(16, 16), t, s, n), std::sqrt(1.0 - a) * n) == 0.0);
  const Image2D x2 = test::random_image(16, 16, 3);
  const Image2D lhs = forward_diffuse(2.0 * x + x2, t, s, n + n);
  const Image2D rhs = forward_diffuse(2.0 * x, t, s, n) + forward_diffuse(x2, t, s, n);
  CHECK(max_abs_diff(lhs, rhs) < 1e-12);
  CHECK_THROWS_AS(forward_diffuse(x, t, s, Image2D(8, 8)), Error);
}

TEST_CASE("forward diffusion preserves unit variance") {
  const AlphaSchedule s = make_schedule(1000);
  double total = 0.0;
  std::size_t count = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const Image2D x = sample_noise(NoiseSpec{NoiseKind::gaussian, 16, 16, 2 * seed});
    const Image2D n = sample_noise(NoiseSpec{NoiseKind::blue, 16, 16, 2 * seed + 1});
    const Image2D y = forward_diffuse(x, 1 + static_cast<int>(seed * 5 % 1000), s, n);
    for (double v : y.pixels()) total += v * v;
    count += y.size();
  }
  CHECK(total / static_cast<double>(count) == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("known-noise inversion recovers the clean image") {
  const AlphaSchedule s = make_schedule(1000);
  for (int t : {1, 10, 300, 999, 1000}) {
    const Image2D x = test::random_image(16, 16, t);
    const Image2D n = sample_noise(NoiseSpec{NoiseKind::blue, 16, 16, static_cast<std::uint64_t>(t)});
    const Image2D y = forward_diffuse(x, t, s, n);
    const Image2D back = (1.0 / std::sqrt(s.alpha_bar(t))) * (y - std::sqrt(1.0 - s.alpha_bar(t)) * n);
    CHECK(max_abs_diff(back, x) < 1e-9);
  }
}

TEST_CASE("ddpm sigma") {
  CHECK(sigma_ddpm(0.9, 0.8) == doctest::Approx(0.23570).epsilon(1e-5 / 0.2357));
  CHECK(sigma_ddpm(0.9, 0.8) == doctest::Approx(std::sqrt(0.1 / 0.2) * std::sqrt(1.0 - 0.8 / 0.9)));
  CHECK(sigma_ddpm(0.7, 0.7) == 0.0);
  const AlphaSchedule s = make_schedule(1000);
  for (int t = 2; t <= 1000; ++t) {
    const double sg = sigma_ddpm(t, s);
    CHECK(sg >= 0.0);
    CHECK(sg * sg <= 1.0 - s.alpha_bar(t - 1) + 1e-15);
  }
}

TEST_CASE("per-frequency snr") {
  const AlphaSchedule s = make_schedule(1000);
  const RadialPsd img = radial_psd(test::random_image(32, 32, 8));
  const RadialPsd early = per_frequency_snr(img, 100, s, NoiseKind::blue);
  const RadialPsd late = per_frequency_snr(img, 500, s, NoiseKind::blue);
  REQUIRE(early.bins.size() == late.bins.size());
  for (std::size_t i = 0; i < early.bins.size(); ++i) CHECK(late.bins[i].mean_power < early.bins[i].mean_power);

  RadialPsd flat;
  for (int k = 1; k <= 16; ++k) flat.bins.push_back({k / 32.0, 1.0});
  // alpha_bar = 0.5 on a hand-built two step schedule.
  const AlphaSchedule half({0.75, 0.5});
  for (const auto& b : per_frequency_snr(flat, 2, half, NoiseKind::gaussian).bins) {
    CHECK(b.mean_power == doctest::Approx(1.0));
  }
  const auto blue = per_frequency_snr(flat, 2, half, NoiseKind::blue).bins;
  const auto white = per_frequency_snr(flat, 2, half, NoiseKind::gaussian).bins;
  // Blue noise puts more power at high frequency: the high/low SNR ratio falls.
  CHECK(blue.back().mean_power / blue.front().mean_power <
        white.back().mean_power / white.front().mean_power);
}
