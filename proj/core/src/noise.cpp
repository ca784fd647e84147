#include "fddm/noise.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <string>

#include "fddm/error.hpp"
#include "fddm/rng.hpp"

namespace fddm {

namespace {

// FFTW's planner is not thread-safe; execution of distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};
template <typename T>
using FftwBuffer = std::unique_ptr<T[], FftwFree>;

struct PlanDeleter {
  void operator()(fftw_plan p) const {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(p);
  }
};
using Plan = std::unique_ptr<std::remove_pointer_t<fftw_plan>, PlanDeleter>;

// Signed frequency (cycles/pixel) of DFT index k on an n-point axis.
double axis_frequency(int k, int n) {
  return static_cast<double>(k <= n / 2 ? k : k - n) / n;
}

// Full complex spectrum of a real image (row-major, h rows of w).
std::vector<std::complex<double>> forward_dft(const Image2D& img) {
  const int w = img.width();
  const int h = img.height();
  const int wc = w / 2 + 1;
  FftwBuffer<double> in(static_cast<double*>(fftw_malloc(sizeof(double) * img.size())));
  FftwBuffer<fftw_complex> out(
      static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * h * wc)));
  Plan plan;
  {
    std::lock_guard lock(planner_mutex());
    plan.reset(fftw_plan_dft_r2c_2d(h, w, in.get(), out.get(), FFTW_ESTIMATE));
  }
  std::copy(img.pixels().begin(), img.pixels().end(), in.get());
  fftw_execute(plan.get());

  std::vector<std::complex<double>> full(img.size());
  for (int ky = 0; ky < h; ++ky) {
    for (int kx = 0; kx < w; ++kx) {
      std::complex<double> c;
      if (kx < wc) {
        c = {out[ky * wc + kx][0], out[ky * wc + kx][1]};
      } else {
        // Hermitian symmetry: X[ky][kx] = conj(X[-ky][-kx]).
        const int my = (h - ky) % h;
        const int mx = w - kx;
        c = {out[my * wc + mx][0], -out[my * wc + mx][1]};
      }
      full[static_cast<std::size_t>(ky) * w + kx] = c;
    }
  }
  return full;
}

Image2D blue_noise(const NoiseSpec& spec) {
  const int w = spec.width;
  const int h = spec.height;
  const int wc = w / 2 + 1;
  Rng rng(spec.seed);

  FftwBuffer<double> real(static_cast<double*>(fftw_malloc(sizeof(double) * w * h)));
  FftwBuffer<fftw_complex> spectrum(
      static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * h * wc)));
  Plan r2c;
  Plan c2r;
  {
    std::lock_guard lock(planner_mutex());
    r2c.reset(fftw_plan_dft_r2c_2d(h, w, real.get(), spectrum.get(), FFTW_ESTIMATE));
    c2r.reset(fftw_plan_dft_c2r_2d(h, w, spectrum.get(), real.get(), FFTW_ESTIMATE));
  }
  for (int i = 0; i < w * h; ++i) real[i] = rng.normal();
  fftw_execute(r2c.get());
  for (int ky = 0; ky < h; ++ky) {
    const double fy = axis_frequency(ky, h);
    for (int kx = 0; kx < wc; ++kx) {
      const double fx = axis_frequency(kx, w);
      const double amp = std::sqrt(std::sqrt(fx * fx + fy * fy));
      spectrum[ky * wc + kx][0] *= amp;
      spectrum[ky * wc + kx][1] *= amp;
    }
  }
  fftw_execute(c2r.get());

  Image2D out(w, h);
  double sum = 0.0;
  for (int i = 0; i < w * h; ++i) {
    out[i] = real[i];
    sum += real[i];
  }
  const double mu = sum / (w * h);
  double ss = 0.0;
  for (double& v : out.pixels()) {
    v -= mu;
    ss += v * v;
  }
  const double scale = 1.0 / std::sqrt(ss / (w * h));
  for (double& v : out.pixels()) v *= scale;
  return out;
}

}  // namespace

Image2D sample_noise(const NoiseSpec& spec) {
  if (spec.width <= 0 || spec.height <= 0) {
    throw Error(ErrorKind::BadSize, "noise dimensions must be positive");
  }
  if (spec.kind == NoiseKind::blue) {
    if (spec.width < 8 || spec.height < 8) {
      throw Error(ErrorKind::TooSmall, "blue noise needs at least 8x8, got " +
                                           std::to_string(spec.width) + "x" +
                                           std::to_string(spec.height));
    }
    return blue_noise(spec);
  }
  Rng rng(spec.seed);
  Image2D out(spec.width, spec.height);
  for (double& v : out.pixels()) v = rng.normal();
  return out;
}

std::vector<double> periodogram(const Image2D& img) {
  const auto spectrum = forward_dft(img);
  const double norm = static_cast<double>(img.size());
  std::vector<double> power(spectrum.size());
  for (std::size_t i = 0; i < spectrum.size(); ++i) power[i] = std::norm(spectrum[i]) / norm;
  return power;
}

RadialPsd radial_psd(const Image2D& img) {
  if (img.width() != img.height()) {
    throw Error(ErrorKind::NotSquare, "radial_psd needs a square image");
  }
  const int n = img.width();
  if (n < 16) throw Error(ErrorKind::TooSmall, "radial_psd needs width >= 16");
  const auto power = periodogram(img);
  const int nbins = n / 2;
  std::vector<double> sum(nbins + 1, 0.0);
  std::vector<int> count(nbins + 1, 0);
  for (int ky = 0; ky < n; ++ky) {
    const double fy = axis_frequency(ky, n);
    for (int kx = 0; kx < n; ++kx) {
      const double fx = axis_frequency(kx, n);
      const int bin = static_cast<int>(std::lround(std::sqrt(fx * fx + fy * fy) * n));
      if (bin < 1 || bin > nbins) continue;
      sum[bin] += power[static_cast<std::size_t>(ky) * n + kx];
      ++count[bin];
    }
  }
  RadialPsd psd;
  for (int b = 1; b <= nbins; ++b) {
    if (count[b] == 0) continue;
    psd.bins.push_back({static_cast<double>(b) / n, sum[b] / count[b]});
  }
  return psd;
}

double log_log_slope(const RadialPsd& psd, double f_lo, double f_hi) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (const auto& bin : psd.bins) {
    if (bin.frequency < f_lo || bin.frequency > f_hi || bin.mean_power <= 0.0) continue;
    const double x = std::log(bin.frequency);
    const double y = std::log(bin.mean_power);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++m;
  }
  if (m < 2) throw Error(ErrorKind::TooFewSamples, "log_log_slope needs at least two bins");
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

}  // namespace fddm
