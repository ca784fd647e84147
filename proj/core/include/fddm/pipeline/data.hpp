#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fddm/image.hpp"

namespace fddm::pipeline {

/// Two modalities rendered from one set of primitives.
struct PhantomPair {
  Image2D modality_a;
  Image2D modality_b;
  std::uint64_t seed = 0;
};

/// Tissue classes of the phantom geometry.
enum class Tissue : int { background = 0, soft = 1, bone = 2, fluid = 3, lesion = 4 };
inline constexpr int kTissueCount = 5;

/// Per-class intensities in [-1, 1] before bias field and texture.
const double* palette_a();
const double* palette_b();

/// Layered ellipses (outer shell, inner chambers, small lesions). Modality
/// A applies palette A and a smooth multiplicative bias field, modality B
/// palette B plus fine additive texture; both end in [-1, 1]. Pair i is
/// drawn from derive_seed(seed, i). Throws BadSize unless size is a
/// positive multiple of 4 and count >= 1.
std::vector<PhantomPair> generate_phantoms(int count, int size, std::uint64_t seed);

/// Inverse of the phantom normalisation, giving raw scanner-like units:
/// MR-like a in [0, 1000] and CT in Hounsfield units.
Image2D phantom_to_raw_mr(const Image2D& a);
Image2D phantom_to_raw_ct(const Image2D& b);

enum class Modality { mr, ct };

/// Linear-interpolated percentile of the pixel values, q in [0, 100].
double percentile(const Image2D& img, double q);

/// Bilinear resize with half-pixel centres and edge clamping.
Image2D resize_bilinear(const Image2D& img, int width, int height);

/// mr: clip below the 0.5th percentile, min-max rescale to [-1, 1].
/// ct: clamp to [-1000, 1000] and map linearly to [-1, 1].
/// Then bilinear resize to resolution x resolution. Throws DegenerateRange
/// for a constant image after clipping.
Image2D preprocess_slice(const Image2D& raw, Modality modality, int resolution);

/// Preprocessed slices of one modality read from a directory of arrays.
struct Slices {
  std::vector<std::string> stems;
  std::vector<Image2D> images;
};
Slices load_slices(const std::filesystem::path& dir, Modality modality, int resolution);

}  // namespace fddm::pipeline
