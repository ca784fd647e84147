#include "fddm/pipeline/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "fddm/error.hpp"
#include "fddm/image_ops.hpp"
#include "fddm/pipeline/array_io.hpp"
#include "fddm/rng.hpp"

namespace fddm::pipeline {

namespace {

constexpr double kPaletteA[kTissueCount] = {-1.0, 0.6, 0.0, 0.3, 0.95};
constexpr double kPaletteB[kTissueCount] = {-1.0, 0.05, 0.9, -0.05, 0.25};
constexpr double kTextureSigma = 0.03;
constexpr double kBiasAmplitude = 0.15;
constexpr int kSuper = 4;  // supersamples per axis

struct Ellipse {
  double cx, cy, rx, ry, angle;

  bool contains(double x, double y) const {
    const double c = std::cos(angle), s = std::sin(angle);
    const double dx = x - cx, dy = y - cy;
    const double u = (c * dx + s * dy) / rx;
    const double v = (-s * dx + c * dy) / ry;
    return u * u + v * v <= 1.0;
  }
  Ellipse scaled(double k) const { return Ellipse{cx, cy, rx * k, ry * k, angle}; }
};

struct Geometry {
  Ellipse body;
  Ellipse inner;  // inside of the bone shell
  std::vector<Ellipse> chambers;
  std::vector<Ellipse> lesions;

  Tissue classify(double x, double y) const {
    if (!body.contains(x, y)) return Tissue::background;
    if (!inner.contains(x, y)) return Tissue::bone;
    for (const auto& l : lesions) {
      if (l.contains(x, y)) return Tissue::lesion;
    }
    for (const auto& c : chambers) {
      if (c.contains(x, y)) return Tissue::fluid;
    }
    return Tissue::soft;
  }
};

// Coordinates are in units of the image side, origin at the centre.
Geometry draw_geometry(Rng& rng) {
  Geometry g;
  g.body = Ellipse{rng.uniform(-0.04, 0.04), rng.uniform(-0.04, 0.04), rng.uniform(0.34, 0.44),
                   rng.uniform(0.28, 0.40), rng.uniform(0.0, std::numbers::pi)};
  g.inner = g.body.scaled(rng.uniform(0.78, 0.86));
  const int chambers = rng.uniform_int(1, 3);
  for (int i = 0; i < chambers; ++i) {
    const double r = std::sqrt(rng.uniform(0.0, 0.25));
    const double a = rng.uniform(0.0, 2.0 * std::numbers::pi);
    g.chambers.push_back(Ellipse{g.inner.cx + r * g.inner.rx * std::cos(a),
                                 g.inner.cy + r * g.inner.ry * std::sin(a),
                                 rng.uniform(0.07, 0.14), rng.uniform(0.05, 0.11),
                                 rng.uniform(0.0, std::numbers::pi)});
  }
  const int lesions = rng.uniform_int(1, 3);
  for (int i = 0; i < lesions; ++i) {
    const double r = std::sqrt(rng.uniform(0.0, 0.45));
    const double a = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double rad = rng.uniform(0.035, 0.07);
    g.lesions.push_back(Ellipse{g.inner.cx + r * g.inner.rx * std::cos(a),
                                g.inner.cy + r * g.inner.ry * std::sin(a), rad,
                                rad * rng.uniform(0.7, 1.0), rng.uniform(0.0, std::numbers::pi)});
  }
  return g;
}

// Area fraction of each class inside every pixel.
std::vector<std::array<double, kTissueCount>> coverage(const Geometry& g, int size) {
  std::vector<std::array<double, kTissueCount>> out(static_cast<std::size_t>(size) * size);
  const double w = 1.0 / (kSuper * kSuper);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      auto& cell = out[static_cast<std::size_t>(y) * size + x];
      cell.fill(0.0);
      for (int sy = 0; sy < kSuper; ++sy) {
        for (int sx = 0; sx < kSuper; ++sx) {
          const double px = (x + (sx + 0.5) / kSuper) / size - 0.5;
          const double py = (y + (sy + 0.5) / kSuper) / size - 0.5;
          cell[static_cast<int>(g.classify(px, py))] += w;
        }
      }
    }
  }
  return out;
}

}  // namespace

const double* palette_a() { return kPaletteA; }
const double* palette_b() { return kPaletteB; }

std::vector<PhantomPair> generate_phantoms(int count, int size, std::uint64_t seed) {
  if (count < 1) throw Error(ErrorKind::BadSize, "phantom count must be at least 1");
  if (size <= 0 || size % 4 != 0) {
    throw Error(ErrorKind::BadSize, "phantom size must be a positive multiple of 4");
  }
  std::vector<PhantomPair> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    const std::uint64_t pair_seed = derive_seed(seed, static_cast<std::uint64_t>(i));
    Rng rng(pair_seed);
    const Geometry g = draw_geometry(rng);
    const auto cover = coverage(g, size);

    // Smooth multiplicative field: a tilted plane plus one long-wave ripple.
    const double gx = rng.uniform(-1.0, 1.0), gy = rng.uniform(-1.0, 1.0);
    const double fx = rng.uniform(0.5, 1.5), fy = rng.uniform(0.5, 1.5);
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);

    Image2D a(size, size), b(size, size);
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) {
        const auto& cell = cover[static_cast<std::size_t>(y) * size + x];
        double va = 0.0, vb = 0.0;
        for (int k = 0; k < kTissueCount; ++k) {
          va += cell[k] * kPaletteA[k];
          vb += cell[k] * kPaletteB[k];
        }
        const double u = (x + 0.5) / size - 0.5, v = (y + 0.5) / size - 0.5;
        const double bias =
            1.0 + kBiasAmplitude * (0.5 * (gx * u + gy * v) +
                                    0.5 * std::sin(2.0 * std::numbers::pi * (fx * u + fy * v) + phase));
        // The field scales MR signal, i.e. the offset intensity (v + 1).
        a.at(x, y) = std::clamp((va + 1.0) * bias - 1.0, -1.0, 1.0);
        const double texture = (1.0 - cell[0]) * kTextureSigma * rng.normal();
        b.at(x, y) = std::clamp(vb + texture, -1.0, 1.0);
      }
    }
    out.push_back(PhantomPair{std::move(a), std::move(b), pair_seed});
  }
  return out;
}

Image2D phantom_to_raw_mr(const Image2D& a) {
  Image2D out = a;
  for (double& v : out.pixels()) v = (v + 1.0) * 500.0;
  return out;
}

Image2D phantom_to_raw_ct(const Image2D& b) {
  Image2D out = b;
  for (double& v : out.pixels()) v *= 1000.0;
  return out;
}

double percentile(const Image2D& img, double q) {
  if (!(q >= 0.0 && q <= 100.0)) throw Error(ErrorKind::RangeViolation, "percentile outside [0, 100]");
  std::vector<double> v(img.pixels().begin(), img.pixels().end());
  std::sort(v.begin(), v.end());
  const double pos = q / 100.0 * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

Image2D resize_bilinear(const Image2D& img, int width, int height) {
  if (width <= 0 || height <= 0) throw Error(ErrorKind::BadSize, "resize target must be positive");
  if (width == img.width() && height == img.height()) return img;
  Image2D out(width, height);
  const double sx = static_cast<double>(img.width()) / width;
  const double sy = static_cast<double>(img.height()) / height;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, img.height() - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, img.height() - 1);
    const double ty = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, img.width() - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, img.width() - 1);
      const double tx = fx - x0;
      const double top = img.at(x0, y0) * (1 - tx) + img.at(x1, y0) * tx;
      const double bottom = img.at(x0, y1) * (1 - tx) + img.at(x1, y1) * tx;
      out.at(x, y) = top * (1 - ty) + bottom * ty;
    }
  }
  return out;
}

Image2D preprocess_slice(const Image2D& raw, Modality modality, int resolution) {
  require_finite(raw, "preprocess_slice");
  Image2D out = raw;
  if (modality == Modality::mr) {
    const double floor_value = percentile(raw, 0.5);
    double lo = floor_value, hi = floor_value;
    for (double& v : out.pixels()) {
      v = std::max(v, floor_value);
      hi = std::max(hi, v);
    }
    if (!(hi > lo)) throw Error(ErrorKind::DegenerateRange, "mr slice is constant after clipping");
    for (double& v : out.pixels()) v = 2.0 * (v - lo) / (hi - lo) - 1.0;
  } else {
    for (double& v : out.pixels()) v = std::clamp(v, -1000.0, 1000.0) / 1000.0;
  }
  return resize_bilinear(out, resolution, resolution);
}

Slices load_slices(const std::filesystem::path& dir, Modality modality, int resolution) {
  Slices s;
  for (const auto& entry : list_arrays(dir)) {
    s.stems.push_back(entry.stem);
    s.images.push_back(preprocess_slice(read_array(entry.path), modality, resolution));
  }
  if (s.images.empty()) throw Error(ErrorKind::DatasetError, "no arrays in " + dir.string());
  return s;
}

}  // namespace fddm::pipeline
