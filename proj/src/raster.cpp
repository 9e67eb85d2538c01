#include "seamstain/raster.hpp"

#include <algorithm>
#include <cstring>

namespace seamstain {

std::string Shape::str() const {
  return "[" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," +
         std::to_string(w) + "]";
}

Raster crop(const Raster& src, int x, int y, int w, int h) {
  if (x < 0 || y < 0 || w <= 0 || h <= 0 || x + w > src.width() || y + h > src.height()) {
    throw InvalidArgument("crop: rectangle outside raster");
  }
  Raster out(h, w, src.channels());
  const std::size_t row = static_cast<std::size_t>(w) * src.channels();
  for (int r = 0; r < h; ++r) {
    std::memcpy(out.pixel(r, 0), src.pixel(y + r, x), row * sizeof(float));
  }
  return out;
}

Raster luma(const Raster& rgb) {
  if (rgb.channels() == 1) return rgb;
  if (rgb.channels() != 3) throw ShapeMismatch("luma: expected 1 or 3 channels");
  Raster out(rgb.height(), rgb.width(), 1);
  for (int y = 0; y < rgb.height(); ++y) {
    for (int x = 0; x < rgb.width(); ++x) {
      const float* p = rgb.pixel(y, x);
      out.at(y, x, 0) = static_cast<float>(0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]);
    }
  }
  return out;
}

double mean_squared_error(const Raster& a, const Raster& b) {
  if (!a.same_dims(b)) throw ShapeMismatch("mean_squared_error: dimension mismatch");
  auto va = a.values();
  auto vb = b.values();
  double acc = 0.0;
  for (std::size_t i = 0; i < va.size(); ++i) {
    const double d = static_cast<double>(va[i]) - vb[i];
    acc += d * d;
  }
  return va.empty() ? 0.0 : acc / static_cast<double>(va.size());
}

template <typename T>
Tensor<T> to_model_input(const Raster& r) {
  Tensor<T> t(1, r.channels(), r.height(), r.width());
  for (int c = 0; c < r.channels(); ++c) {
    T* plane = t.plane(0, c);
    for (int y = 0; y < r.height(); ++y) {
      for (int x = 0; x < r.width(); ++x) {
        plane[static_cast<std::size_t>(y) * r.width() + x] =
            static_cast<T>(2.0 * r.at(y, x, c) - 1.0);
      }
    }
  }
  return t;
}

template <typename T>
Raster from_model_output(const Tensor<T>& t, int index) {
  Raster r(t.h(), t.w(), t.c());
  for (int c = 0; c < t.c(); ++c) {
    const T* plane = t.plane(index, c);
    for (int y = 0; y < t.h(); ++y) {
      for (int x = 0; x < t.w(); ++x) {
        const double v = 0.5 * (static_cast<double>(plane[static_cast<std::size_t>(y) * t.w() + x]) + 1.0);
        r.at(y, x, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  }
  return r;
}

template Tensor<float> to_model_input<float>(const Raster&);
template Tensor<double> to_model_input<double>(const Raster&);
template Raster from_model_output<float>(const Tensor<float>&, int);
template Raster from_model_output<double>(const Tensor<double>&, int);

Tensor<float> to_planar(const Raster& r) {
  Tensor<float> t(1, r.channels(), r.height(), r.width());
  for (int c = 0; c < r.channels(); ++c) {
    float* plane = t.plane(0, c);
    for (int y = 0; y < r.height(); ++y) {
      for (int x = 0; x < r.width(); ++x) {
        plane[static_cast<std::size_t>(y) * r.width() + x] = r.at(y, x, c);
      }
    }
  }
  return t;
}

Raster from_planar(const Tensor<float>& t, int index) {
  Raster r(t.h(), t.w(), t.c());
  for (int c = 0; c < t.c(); ++c) {
    const float* plane = t.plane(index, c);
    for (int y = 0; y < t.h(); ++y) {
      for (int x = 0; x < t.w(); ++x) {
        r.at(y, x, c) = plane[static_cast<std::size_t>(y) * t.w() + x];
      }
    }
  }
  return r;
}

}  // namespace seamstain
