#include "seamstain/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "seamstain/image_io.hpp"

namespace seamstain {

namespace {

Raster to_gray(const Raster& r, double scale) {
  Raster g = r.channels() == 1 ? r : luma(r);
  for (float& v : g.values()) v = static_cast<float>(v * scale);
  return g;
}

// Box sums of a row-major h x w map over win x win windows whose top-left
// corners lie on a `step` grid. Row pass, then column pass, both direct sums
// so identical inputs give identical results regardless of the data.
std::vector<double> window_sums(const std::vector<double>& v, int h, int w, int win, int step, int& out_h,
                                int& out_w) {
  out_w = (w - win) / step + 1;
  out_h = (h - win) / step + 1;
  std::vector<double> rows(static_cast<std::size_t>(h) * out_w);
  for (int y = 0; y < h; ++y) {
    const double* src = v.data() + static_cast<std::size_t>(y) * w;
    for (int j = 0; j < out_w; ++j) {
      double s = 0.0;
      for (int t = 0; t < win; ++t) s += src[j * step + t];
      rows[static_cast<std::size_t>(y) * out_w + j] = s;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(out_h) * out_w);
  for (int i = 0; i < out_h; ++i) {
    for (int j = 0; j < out_w; ++j) {
      double s = 0.0;
      for (int t = 0; t < win; ++t) s += rows[static_cast<std::size_t>(i * step + t) * out_w + j];
      out[static_cast<std::size_t>(i) * out_w + j] = s;
    }
  }
  return out;
}

double band_similarity(const ComplexBand& a, const ComplexBand& b, const PyramidConfig& cfg) {
  const std::size_t n = a.values.size();
  std::vector<double> cross_re(n), cross_im(n), energy_a(n), energy_b(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double ar = a.values[i].real(), ai = a.values[i].imag();
    const double br = b.values[i].real(), bi = b.values[i].imag();
    // a * conj(b), written out so that a == b reproduces |a|^2 bit-for-bit.
    cross_re[i] = ar * br + ai * bi;
    cross_im[i] = ai * br - ar * bi;
    energy_a[i] = ar * ar + ai * ai;
    energy_b[i] = br * br + bi * bi;
  }
  int oh = 0, ow = 0;
  const auto sre = window_sums(cross_re, a.height, a.width, cfg.window, cfg.window_step, oh, ow);
  const auto sim = window_sums(cross_im, a.height, a.width, cfg.window, cfg.window_step, oh, ow);
  const auto sa = window_sums(energy_a, a.height, a.width, cfg.window, cfg.window_step, oh, ow);
  const auto sb = window_sums(energy_b, a.height, a.width, cfg.window, cfg.window_step, oh, ow);
  double total = 0.0;
  for (std::size_t i = 0; i < sre.size(); ++i) {
    total += (2.0 * std::hypot(sre[i], sim[i]) + cfg.K) / (sa[i] + sb[i] + cfg.K);
  }
  return total / static_cast<double>(sre.size());
}

}  // namespace

double cwssim(const Raster& a, const Raster& b, const PyramidConfig& cfg) {
  if (!a.same_dims(b)) throw ShapeMismatch("cwssim: images differ in size");
  const SteerablePyramid pa = steerable_pyramid(to_gray(a, cfg.intensity_scale), cfg);
  const SteerablePyramid pb = steerable_pyramid(to_gray(b, cfg.intensity_scale), cfg);
  double total = 0.0;
  for (std::size_t i = 0; i < pa.bands.size(); ++i) total += band_similarity(pa.bands[i], pb.bands[i], cfg);
  return total / static_cast<double>(pa.bands.size());
}

double pixel_ssim(const Raster& a, const Raster& b) {
  if (!a.same_dims(b)) throw ShapeMismatch("pixel_ssim: images differ in size");
  constexpr int kWin = 7;
  constexpr double c1 = 0.01 * 0.01;
  constexpr double c2 = 0.03 * 0.03;
  const Raster ga = to_gray(a, 1.0), gb = to_gray(b, 1.0);
  const int h = ga.height(), w = ga.width();
  if (h < kWin || w < kWin) throw InvalidArgument("pixel_ssim: image smaller than the 7x7 window");
  const std::size_t n = static_cast<std::size_t>(h) * w;
  std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = ga.values()[i];
    y[i] = gb.values()[i];
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  int oh = 0, ow = 0;
  const auto sx = window_sums(x, h, w, kWin, 1, oh, ow);
  const auto sy = window_sums(y, h, w, kWin, 1, oh, ow);
  const auto sxx = window_sums(xx, h, w, kWin, 1, oh, ow);
  const auto syy = window_sums(yy, h, w, kWin, 1, oh, ow);
  const auto sxy = window_sums(xy, h, w, kWin, 1, oh, ow);
  const double inv = 1.0 / (kWin * kWin);
  double total = 0.0;
  for (std::size_t i = 0; i < sx.size(); ++i) {
    const double mx = sx[i] * inv, my = sy[i] * inv;
    const double vx = sxx[i] * inv - mx * mx;
    const double vy = syy[i] * inv - my * my;
    const double cov = sxy[i] * inv - mx * my;
    total += ((2 * mx * my + c1) * (2 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
  }
  return total / static_cast<double>(sx.size());
}

double median_of(std::vector<double> v) {
  if (v.empty()) throw InvalidArgument("median of an empty set");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

Summary summarize(std::span<const double> values) {
  if (values.empty()) throw InvalidArgument("summarize: no values");
  Summary s;
  s.count = values.size();
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(s.count);
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(ss / static_cast<double>(s.count));
  s.median = median_of(std::vector<double>(values.begin(), values.end()));
  return s;
}

std::string format_summary(const Summary& s) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.2f (%.2f) ± %.2f", s.mean, s.median, s.std);
  return buf;
}

EvalReport evaluate_images(const std::vector<std::pair<std::string, std::pair<Raster, Raster>>>& pairs, int fov,
                           const PyramidConfig& cfg) {
  if (pairs.empty()) throw InvalidArgument("evaluate: no slides");
  if (fov <= 0) throw InvalidArgument("evaluate: fov must be positive");
  cfg.check_image(fov, fov);

  struct Job {
    std::size_t pair;
    int index, x, y;
  };
  std::vector<Job> jobs;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const Raster& v = pairs[p].second.first;
    const Raster& r = pairs[p].second.second;
    if (!v.same_dims(r)) throw ShapeMismatch("evaluate: slide '" + pairs[p].first + "' differs in size");
    if (fov > v.width() || fov > v.height()) {
      throw InvalidArgument("evaluate: fov " + std::to_string(fov) + " larger than slide '" + pairs[p].first + "'");
    }
    int index = 0;
    for (int y = 0; y + fov <= v.height(); y += fov) {
      for (int x = 0; x + fov <= v.width(); x += fov) jobs.push_back({p, index++, x, y});
    }
  }

  EvalReport rep;
  rep.per_tile.resize(jobs.size());
  std::vector<std::string> errors(jobs.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(jobs.size()); ++i) {
    const Job& j = jobs[i];
    const auto& [id, images] = pairs[j.pair];
    try {
      const double score =
          cwssim(crop(images.first, j.x, j.y, fov, fov), crop(images.second, j.x, j.y, fov, fov), cfg);
      rep.per_tile[i] = {id, j.index, j.x, j.y, score};
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw InvalidArgument(e);
  }

  std::vector<double> all;
  for (const auto& [id, images] : pairs) {
    std::vector<double> vals;
    for (const auto& t : rep.per_tile) {
      if (t.slide_id == id) vals.push_back(t.cwssim);
    }
    rep.per_slide.push_back({id, summarize(vals)});
    all.insert(all.end(), vals.begin(), vals.end());
  }
  rep.overall = summarize(all);
  return rep;
}

std::vector<std::pair<std::string, std::filesystem::path>> list_slides(const std::filesystem::path& dir,
                                                                       const std::string& nested_name) {
  if (!std::filesystem::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::map<std::string, std::filesystem::path> found;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") {
      found[entry.path().stem().string()] = entry.path();
    } else if (entry.is_directory() && std::filesystem::is_regular_file(entry.path() / nested_name)) {
      found[entry.path().filename().string()] = entry.path() / nested_name;
    }
  }
  return {found.begin(), found.end()};
}

EvalReport evaluate_pairs(const std::filesystem::path& virtual_dir, const std::filesystem::path& real_dir, int fov,
                          const PyramidConfig& cfg, const std::string& nested_name) {
  const auto virt = list_slides(virtual_dir, nested_name);
  const auto real = list_slides(real_dir, nested_name);
  if (virt.size() != real.size()) throw InvalidArgument("evaluate: directories hold different slide sets");
  std::vector<std::pair<std::string, std::pair<Raster, Raster>>> pairs;
  for (std::size_t i = 0; i < virt.size(); ++i) {
    if (virt[i].first != real[i].first) {
      throw InvalidArgument("evaluate: slide '" + virt[i].first + "' has no counterpart");
    }
    pairs.push_back({virt[i].first, {read_png(virt[i].second), read_png(real[i].second)}});
  }
  return evaluate_images(pairs, fov, cfg);
}

std::string eval_csv(const EvalReport& r) {
  std::ostringstream os;
  os.precision(12);
  os << "slide_id,fov_index,x,y,cwssim\n";
  for (const auto& t : r.per_tile) os << t.slide_id << ',' << t.fov_index << ',' << t.x << ',' << t.y << ',' << t.cwssim << '\n';
  return os.str();
}

}  // namespace seamstain
