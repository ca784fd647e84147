#pragma once

#include <cstdint>
#include <vector>

#include "fddm/image.hpp"

namespace fddm {

enum class NoiseKind { gaussian, blue };

struct NoiseSpec {
  NoiseKind kind = NoiseKind::gaussian;
  int width = 0;
  int height = 0;
  std::uint64_t seed = 0;
};

/// Radially averaged power spectral density. Frequencies are in cycles per
/// pixel, strictly increasing, within (0, 0.5].
struct RadialPsd {
  struct Bin {
    double frequency;
    double mean_power;
  };
  std::vector<Bin> bins;
};

/// Gaussian: i.i.d. standard normal pixels.
///
/// Blue: a white Gaussian field is transformed to the frequency domain,
/// every coefficient is scaled by sqrt(f) with f the radial frequency in
/// cycles/pixel (so the power spectrum grows linearly with f and DC is
/// removed), transformed back through the real-to-complex path, and finally
/// normalised to empirical mean 0 and variance 1. Requires dims >= 8
/// (TooSmall otherwise).
Image2D sample_noise(const NoiseSpec& spec);

/// Periodogram |DFT|^2 / (W*H), averaged over rings of radius round(f*W),
/// W/2 bins, DC excluded. Throws NotSquare, TooSmall (width < 16).
RadialPsd radial_psd(const Image2D& img);

/// Unbinned periodogram |DFT|^2 / (W*H) in row-major frequency order.
std::vector<double> periodogram(const Image2D& img);

/// Least-squares slope of log(mean_power) against log(frequency), using bins
/// whose frequency lies in [f_lo, f_hi] and whose power is positive.
double log_log_slope(const RadialPsd& psd, double f_lo, double f_hi);

}  // namespace fddm
