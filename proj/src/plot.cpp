#include "seamstain/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>

#include "seamstain/image_io.hpp"

namespace seamstain {

namespace {

void put(Raster& img, int x, int y, float r, float g, float b) {
  if (x < 0 || y < 0 || x >= img.width() || y >= img.height()) return;
  float* p = img.pixel(y, x);
  p[0] = r;
  p[1] = g;
  p[2] = b;
}

// Bresenham, two pixels thick.
void line(Raster& img, int x0, int y0, int x1, int y1, float r, float g, float b) {
  const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
  const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  for (;;) {
    put(img, x0, y0, r, g, b);
    put(img, x0, y0 + 1, r, g, b);
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

}  // namespace

Raster line_chart(const std::vector<Panel>& panels, int panel_w, int panel_h) {
  const int n = std::max<int>(1, static_cast<int>(panels.size()));
  Raster img(panel_h, panel_w * n, 3, 1.0f);
  const int margin = 16;
  for (int p = 0; p < static_cast<int>(panels.size()); ++p) {
    const int ox = p * panel_w;
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = 0.0, ymax = 0.0;
    for (const auto& s : panels[p].series) {
      for (double v : s.x) xmin = std::min(xmin, v), xmax = std::max(xmax, v);
      for (double v : s.y) ymin = std::min(ymin, v), ymax = std::max(ymax, v);
    }
    if (!(xmax > xmin)) xmin -= 1.0, xmax += 1.0;
    if (!(ymax > ymin)) ymax = ymin + 1.0;
    const int left = ox + margin, right = ox + panel_w - margin, top = margin, bottom = panel_h - margin;
    auto px = [&](double v) { return left + static_cast<int>(std::lround((v - xmin) / (xmax - xmin) * (right - left))); };
    auto py = [&](double v) { return bottom - static_cast<int>(std::lround((v - ymin) / (ymax - ymin) * (bottom - top))); };
    const float frame = 0.75f;
    line(img, left, top, right, top, frame, frame, frame);
    line(img, left, bottom, right, bottom, frame, frame, frame);
    line(img, left, top, left, bottom, frame, frame, frame);
    line(img, right, top, right, bottom, frame, frame, frame);
    line(img, left, py(0.0), right, py(0.0), 0.5f, 0.5f, 0.5f);
    for (const auto& s : panels[p].series) {
      const std::size_t m = std::min(s.x.size(), s.y.size());
      for (std::size_t i = 0; i + 1 < m; ++i) line(img, px(s.x[i]), py(s.y[i]), px(s.x[i + 1]), py(s.y[i + 1]), s.r, s.g, s.b);
    }
  }
  return img;
}

void write_line_chart(const std::filesystem::path& path, const std::vector<Panel>& panels) {
  write_png(path, line_chart(panels));
}

}  // namespace seamstain
