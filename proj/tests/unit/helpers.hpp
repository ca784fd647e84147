#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fddm/image.hpp"
#include "fddm/rng.hpp"

namespace fddm::test {

inline Image2D random_image(int w, int h, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  Rng rng(seed);
  Image2D img(w, h);
  for (double& v : img.pixels()) v = rng.uniform(lo, hi);
  return img;
}

inline Image2D checkerboard(int n, double amplitude = 1.0) {
  Image2D img(n, n);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) img.at(x, y) = ((x + y) % 2 == 0) ? amplitude : -amplitude;
  }
  return img;
}

inline double energy(const Image2D& img) {
  double e = 0.0;
  for (double v : img.pixels()) e += v * v;
  return e;
}

// Direct 2D correlation with a square kernel. index_map resolves
// out-of-range coordinates (returns -1 for zero).
template <typename Map>
Image2D correlate(const Image2D& img, const std::vector<double>& k, int size, Map index_map) {
  const int r = size / 2;
  Image2D out(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      double acc = 0.0;
      for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
          const int sx = index_map(x + dx, img.width());
          const int sy = index_map(y + dy, img.height());
          if (sx < 0 || sy < 0) continue;
          acc += k[(dy + r) * size + (dx + r)] * img.at(sx, sy);
        }
      }
      out.at(x, y) = acc;
    }
  }
  return out;
}

inline int replicate(int i, int n) { return std::clamp(i, 0, n - 1); }

inline int reflect101(int i, int n) {
  if (i < 0) return -i;
  if (i >= n) return 2 * (n - 1) - i;
  return i;
}

inline std::vector<double> binomial5x5(double gain = 1.0) {
  const double b[5] = {1, 4, 6, 4, 1};
  std::vector<double> k(25);
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) k[i * 5 + j] = gain * b[i] * b[j] / 256.0;
  }
  return k;
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("fddm_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace fddm::test
