#pragma once

// Random test images: uniform noise and smooth procedural textures.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "seamstain/raster.hpp"

namespace seamstain::testing {

inline Raster random_raster(int h, int w, int c, unsigned seed) {
  Raster r(h, w, c);
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> u(0.f, 1.f);
  for (float& v : r.values()) v = u(rng);
  return r;
}

// Smooth random texture: a handful of random sinusoids plus a little noise,
// rescaled into [0,1].
inline Raster textured_raster(int h, int w, unsigned seed, int channels = 1) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  struct Wave {
    double fx, fy, phase, amp;
  };
  std::vector<Wave> waves(8);
  for (auto& wv : waves) wv = {u(rng) * 0.5 - 0.25, u(rng) * 0.5 - 0.25, u(rng) * 6.283, 0.5 + u(rng)};
  Raster r(h, w, channels);
  std::normal_distribution<double> noise(0.0, 0.05);
  double lo = 1e9, hi = -1e9;
  std::vector<double> v(static_cast<std::size_t>(h) * w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double s = noise(rng);
      for (const auto& wv : waves) s += wv.amp * std::sin(6.283185307 * (wv.fx * x + wv.fy * y) + wv.phase);
      v[static_cast<std::size_t>(y) * w + x] = s;
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double t = (v[static_cast<std::size_t>(y) * w + x] - lo) / (hi - lo);
      for (int c = 0; c < channels; ++c) r.at(y, x, c) = static_cast<float>(t * (0.6 + 0.2 * c) + 0.1);
    }
  }
  return r;
}

}  // namespace seamstain::testing
