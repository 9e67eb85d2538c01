#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "seamstain/raster.hpp"

namespace seamstain {

struct Series {
  std::vector<double> x;
  std::vector<double> y;
  float r = 0.f, g = 0.f, b = 0.f;
};

struct Panel {
  std::vector<Series> series;
};

// Side-by-side line charts, one panel per entry, each autoscaled to its own
// data with a light frame and zero line. No text is rendered; the CSVs carry
// the numbers.
Raster line_chart(const std::vector<Panel>& panels, int panel_w = 320, int panel_h = 240);

void write_line_chart(const std::filesystem::path& path, const std::vector<Panel>& panels);

}  // namespace seamstain
