#pragma once

#include <filesystem>

#include "seamstain/raster.hpp"

namespace seamstain {

// 8-bit PNG. Gray, gray+alpha, RGB and RGBA files are accepted on read and
// always returned as 3-channel RGB in [0,1]; alpha is dropped.
Raster read_png(const std::filesystem::path& path);

// Writes 1- or 3-channel rasters as 8-bit PNG; values are clamped to [0,1]
// and rounded to the nearest code.
void write_png(const std::filesystem::path& path, const Raster& raster);

// Round trip through 8-bit codes, i.e. what read_png(write_png(r)) yields.
Raster quantize8(const Raster& raster);

}  // namespace seamstain
