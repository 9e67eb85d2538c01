#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "seamstain/tensor.hpp"

namespace seamstain {

// Interleaved H x W x C image. Stored values are in [0,1]; the networks see
// the same content mapped to [-1,1] (see to_model_input / from_model_output).
class Raster {
 public:
  Raster() = default;
  Raster(int height, int width, int channels, float fill = 0.0f)
      : height_(height), width_(width), channels_(channels),
        data_(static_cast<std::size_t>(height) * width * channels, fill) {}

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int channels() const noexcept { return channels_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  float& at(int y, int x, int c) noexcept { return data_[index(y, x, c)]; }
  float at(int y, int x, int c) const noexcept { return data_[index(y, x, c)]; }
  float* pixel(int y, int x) noexcept { return data_.data() + index(y, x, 0); }
  const float* pixel(int y, int x) const noexcept { return data_.data() + index(y, x, 0); }

  std::span<float> values() noexcept { return data_; }
  std::span<const float> values() const noexcept { return data_; }

  bool same_dims(const Raster& o) const noexcept {
    return height_ == o.height_ && width_ == o.width_ && channels_ == o.channels_;
  }
  bool operator==(const Raster&) const = default;

 private:
  std::size_t index(int y, int x, int c) const noexcept {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<float> data_;
};

// Copies the rectangle [x, x+w) x [y, y+h).
Raster crop(const Raster& src, int x, int y, int w, int h);

// ITU-R BT.601 luma: 0.299 R + 0.587 G + 0.114 B. Single-channel input is
// returned as is.
Raster luma(const Raster& rgb);

double mean_squared_error(const Raster& a, const Raster& b);

// [0,1] HWC -> [-1,1] 1xCxHxW.
template <typename T>
Tensor<T> to_model_input(const Raster& r);

// [-1,1] CxHxW (batch item `index`) -> [0,1] HWC.
template <typename T>
Raster from_model_output(const Tensor<T>& t, int index = 0);

// Channel-major view of a raster without rescaling.
Tensor<float> to_planar(const Raster& r);
Raster from_planar(const Tensor<float>& t, int index = 0);

}  // namespace seamstain
