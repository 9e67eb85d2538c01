#pragma once

#include <complex>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "seamstain/raster.hpp"

namespace seamstain {

struct PyramidConfig {
  int n_scales = 4;
  int n_orientations = 6;
  int window = 7;
  int window_step = 1;
  double K = 0.01;
  // Luma is multiplied by this before the transform, so K is relative to
  // 8-bit intensities by default.
  double intensity_scale = 255.0;

  void validate() const;
  // Images must have min dimension >= window * 2^(n_scales-1) and both
  // dimensions divisible by 2^n_scales.
  void check_image(int width, int height) const;
  bool operator==(const PyramidConfig&) const = default;
};

struct ComplexBand {
  int width = 0;
  int height = 0;
  int scale = 0;
  int orientation = 0;
  std::vector<std::complex<double>> values;  // row-major
};

// Frequency-domain complex steerable pyramid. Radial masks are raised-cosine
// in log2 radius (highpass residual split above pi/2, one octave per scale);
// each scale carries n_orientations complex (single-sided) angular bands.
// The frame is tight:
//   sum|highpass|^2 + sum_s 4^s sum|band_s|^2 + 4^S sum|lowpass|^2 = sum x^2.
struct SteerablePyramid {
  std::vector<double> highpass;  // full resolution, real
  int width = 0;
  int height = 0;
  std::vector<ComplexBand> bands;  // scale-major, orientation-minor
  std::vector<double> lowpass;     // size (w / 2^S) x (h / 2^S)
  int low_width = 0;
  int low_height = 0;

  double energy() const;  // the weighted sum above
};

// x: single-channel raster.
SteerablePyramid steerable_pyramid(const Raster& x, const PyramidConfig& cfg);

// Per band: mean over windows of (2|sum a conj(b)| + K) / (sum|a|^2 + sum|b|^2 + K),
// then the mean over bands. RGB inputs are reduced to luma first.
double cwssim(const Raster& a, const Raster& b, const PyramidConfig& cfg = {});

// Pixel-domain SSIM on luma with a uniform 7x7 window (data range 1).
double pixel_ssim(const Raster& a, const Raster& b);

struct Summary {
  double mean = 0.0;
  double median = 0.0;
  double std = 0.0;  // population standard deviation
  std::size_t count = 0;
};

Summary summarize(std::span<const double> values);
double median_of(std::vector<double> values);
// "mean (median) ± std" with two decimals.
std::string format_summary(const Summary& s);

struct FovScore {
  std::string slide_id;
  int fov_index = 0;
  int x = 0;
  int y = 0;
  double cwssim = 0.0;
};

struct SlideSummary {
  std::string slide_id;
  Summary summary;
};

struct EvalReport {
  std::vector<FovScore> per_tile;
  std::vector<SlideSummary> per_slide;
  Summary overall;
};

// Scores aligned pairs over a non-overlapping fov x fov grid (remainder
// dropped).
EvalReport evaluate_images(const std::vector<std::pair<std::string, std::pair<Raster, Raster>>>& pairs, int fov,
                           const PyramidConfig& cfg = {});

// Slides in a directory are either <dir>/<id>.png or <dir>/<id>/<nested_name>.
// Both directories must hold the same ids.
EvalReport evaluate_pairs(const std::filesystem::path& virtual_dir, const std::filesystem::path& real_dir, int fov,
                          const PyramidConfig& cfg = {}, const std::string& nested_name = "Y.png");

std::vector<std::pair<std::string, std::filesystem::path>> list_slides(const std::filesystem::path& dir,
                                                                       const std::string& nested_name);

// Rows: slide_id,fov_index,x,y,cwssim.
std::string eval_csv(const EvalReport& r);

}  // namespace seamstain
