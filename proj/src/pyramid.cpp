#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>

#include "seamstain/metrics.hpp"

namespace seamstain {

void PyramidConfig::validate() const {
  if (n_scales < 1) throw InvalidArgument("n_scales must be >= 1");
  if (n_orientations < 1) throw InvalidArgument("n_orientations must be >= 1");
  if (window < 1 || window % 2 == 0) throw InvalidArgument("window must be a positive odd integer");
  if (window_step < 1) throw InvalidArgument("window_step must be >= 1");
  if (!(K >= 0.0)) throw InvalidArgument("K must be >= 0");
  if (!(intensity_scale > 0.0)) throw InvalidArgument("intensity_scale must be positive");
}

void PyramidConfig::check_image(int width, int height) const {
  validate();
  const long need = static_cast<long>(window) << (n_scales - 1);
  if (std::min(width, height) < need) {
    throw InvalidArgument("image " + std::to_string(width) + "x" + std::to_string(height) +
                          " too small for the pyramid (min dimension " + std::to_string(need) + ")");
  }
  const int div = 1 << n_scales;
  if (width % div != 0 || height % div != 0) {
    throw InvalidArgument("image dimensions must be divisible by " + std::to_string(div));
  }
}

double SteerablePyramid::energy() const {
  double e = 0.0;
  for (double v : highpass) e += v * v;
  for (const auto& b : bands) {
    double s = 0.0;
    for (const auto& c : b.values) s += std::norm(c);
    e += std::ldexp(s, 2 * b.scale);
  }
  double low = 0.0;
  for (double v : lowpass) low += v * v;
  const int levels = bands.empty() ? 0 : bands.back().scale + 1;
  return e + std::ldexp(low, 2 * levels);
}

namespace {

using cpx = std::complex<double>;

struct FftwDeleter {
  void operator()(fftw_complex* p) const { fftw_free(p); }
};
using FftwBuffer = std::unique_ptr<fftw_complex[], FftwDeleter>;

// FFTW planning is not thread-safe; execution on distinct buffers is.
std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

// In-place 2D transform of a row-major h x w complex array.
void fft2(std::vector<cpx>& data, int h, int w, int sign) {
  FftwBuffer buf(fftw_alloc_complex(static_cast<std::size_t>(h) * w));
  fftw_plan plan;
  {
    std::lock_guard lock(plan_mutex());
    plan = fftw_plan_dft_2d(h, w, buf.get(), buf.get(), sign, FFTW_ESTIMATE);
  }
  std::copy(data.begin(), data.end(), reinterpret_cast<cpx*>(buf.get()));
  fftw_execute(plan);
  std::copy(reinterpret_cast<cpx*>(buf.get()), reinterpret_cast<cpx*>(buf.get()) + data.size(), data.begin());
  std::lock_guard lock(plan_mutex());
  fftw_destroy_plan(plan);
}

// Signed frequency index of FFT bin i on an axis of length n.
int signed_bin(int i, int n) { return i < (n + 1) / 2 ? i : i - n; }

// Raised-cosine pair over one octave ending at r_hi: lo^2 + hi^2 = 1.
double radial_t(double r, double r_hi) {
  if (r <= 0.0) return 0.0;
  return std::clamp(std::log2(r / (0.5 * r_hi)), 0.0, 1.0);
}
double hi_mask(double r, double r_hi) { return std::sin(0.5 * std::numbers::pi * radial_t(r, r_hi)); }
double lo_mask(double r, double r_hi) { return std::cos(0.5 * std::numbers::pi * radial_t(r, r_hi)); }

struct Grid {
  int h, w;
  std::vector<double> r, theta;
};

Grid make_grid(int h, int w) {
  Grid g{h, w, {}, {}};
  g.r.resize(static_cast<std::size_t>(h) * w);
  g.theta.resize(g.r.size());
  for (int y = 0; y < h; ++y) {
    const double wy = 2.0 * std::numbers::pi * signed_bin(y, h) / h;
    for (int x = 0; x < w; ++x) {
      const double wx = 2.0 * std::numbers::pi * signed_bin(x, w) / w;
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      g.r[i] = std::hypot(wx, wy);
      g.theta[i] = std::atan2(wy, wx);
    }
  }
  return g;
}

// Keeps the central half of the spectrum on each axis. The lowpass mask is
// zero beyond pi/2, so nothing is lost; the factor 1/4 keeps the spatial
// samples equal to the subsampled band-limited signal.
std::vector<cpx> crop_half(const std::vector<cpx>& spec, int h, int w) {
  const int nh = h / 2, nw = w / 2;
  std::vector<cpx> out(static_cast<std::size_t>(nh) * nw);
  for (int y = 0; y < nh; ++y) {
    const int ky = signed_bin(y, nh);
    const int sy = ky < 0 ? ky + h : ky;
    for (int x = 0; x < nw; ++x) {
      const int kx = signed_bin(x, nw);
      const int sx = kx < 0 ? kx + w : kx;
      out[static_cast<std::size_t>(y) * nw + x] = spec[static_cast<std::size_t>(sy) * w + sx] * 0.25;
    }
  }
  return out;
}

double angular_gain(int k) {
  // alpha_K^2 = 2^(2(K-1)) ((K-1)!)^2 / (K (2(K-1))!) makes
  // sum_k alpha^2 cos^(2(K-1))(theta - pi k / K) == 1; the extra sqrt(2)
  // compensates for keeping only one half-plane per complex band.
  const double lg = 2.0 * (k - 1) * std::log(2.0) + 2.0 * std::lgamma(k) - std::log(k) - std::lgamma(2.0 * (k - 1) + 1);
  return std::sqrt(2.0) * std::exp(0.5 * lg);
}

}  // namespace

SteerablePyramid steerable_pyramid(const Raster& x, const PyramidConfig& cfg) {
  if (x.channels() != 1) throw InvalidArgument("steerable_pyramid expects a single-channel raster");
  cfg.check_image(x.width(), x.height());
  int h = x.height(), w = x.width();
  const std::size_t n = static_cast<std::size_t>(h) * w;
  std::vector<cpx> spec(n);
  for (std::size_t i = 0; i < n; ++i) spec[i] = x.values()[i];
  fft2(spec, h, w, FFTW_FORWARD);

  SteerablePyramid pyr;
  pyr.width = w;
  pyr.height = h;
  Grid grid = make_grid(h, w);
  {
    std::vector<cpx> hi(n);
    for (std::size_t i = 0; i < n; ++i) {
      hi[i] = spec[i] * hi_mask(grid.r[i], std::numbers::pi);
      spec[i] *= lo_mask(grid.r[i], std::numbers::pi);
    }
    fft2(hi, h, w, FFTW_BACKWARD);
    pyr.highpass.resize(n);
    for (std::size_t i = 0; i < n; ++i) pyr.highpass[i] = hi[i].real() / static_cast<double>(n);
  }

  const int K = cfg.n_orientations;
  const double alpha = angular_gain(K);
  const double r_band = 0.5 * std::numbers::pi;
  for (int s = 0; s < cfg.n_scales; ++s) {
    const std::size_t m = static_cast<std::size_t>(h) * w;
    for (int k = 0; k < K; ++k) {
      const double theta_k = std::numbers::pi * k / K;
      std::vector<cpx> band(m);
      for (std::size_t i = 0; i < m; ++i) {
        const double d = std::remainder(grid.theta[i] - theta_k, 2.0 * std::numbers::pi);
        const double c = std::cos(d);
        if (c <= 0.0) continue;
        band[i] = spec[i] * (hi_mask(grid.r[i], r_band) * alpha * std::pow(c, K - 1));
      }
      fft2(band, h, w, FFTW_BACKWARD);
      for (auto& v : band) v /= static_cast<double>(m);
      pyr.bands.push_back({w, h, s, k, std::move(band)});
    }
    for (std::size_t i = 0; i < m; ++i) spec[i] *= lo_mask(grid.r[i], r_band);
    spec = crop_half(spec, h, w);
    h /= 2;
    w /= 2;
    grid = make_grid(h, w);
  }
  fft2(spec, h, w, FFTW_BACKWARD);
  pyr.low_width = w;
  pyr.low_height = h;
  pyr.lowpass.resize(spec.size());
  for (std::size_t i = 0; i < spec.size(); ++i) pyr.lowpass[i] = spec[i].real() / static_cast<double>(spec.size());
  return pyr;
}

}  // namespace seamstain
