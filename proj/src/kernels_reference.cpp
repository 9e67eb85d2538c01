#include <cmath>
#include <vector>

#include "seamstain/kernels.hpp"

namespace seamstain {

void ConvGeometry::check_input(const Shape& s) const {
  if (s.c != in_channels) {
    throw ShapeMismatch("conv2d: expected " + std::to_string(in_channels) + " input channels, got " +
                        s.str());
  }
  if (s.h + 2 * pad < kernel || s.w + 2 * pad < kernel) {
    throw ShapeMismatch("conv2d: input " + s.str() + " smaller than kernel");
  }
  if (padding == Padding::reflect && (pad >= s.h || pad >= s.w)) {
    throw ShapeMismatch("conv2d: reflection pad " + std::to_string(pad) + " too wide for " + s.str());
  }
}

void ConvTransposeGeometry::check_input(const Shape& s) const {
  if (s.c != in_channels) {
    throw ShapeMismatch("conv_transpose2d: expected " + std::to_string(in_channels) +
                        " input channels, got " + s.str());
  }
  if (s.h < 1 || s.w < 1) throw ShapeMismatch("conv_transpose2d: empty input");
}

namespace kernels::reference {
namespace {

// Maps a padded coordinate to a source index, or -1 for a zero pad sample.
inline int source_index(int i, int n, Padding mode) {
  if (i >= 0 && i < n) return i;
  if (mode == Padding::zero) return -1;
  return reflect_index(i, n);
}

}  // namespace

template <typename T>
Tensor<T> conv2d_forward(const ConvGeometry& g, const Tensor<T>& x, std::span<const T> w,
                         std::span<const T> b) {
  g.check_input(x.shape());
  const int ho = g.out_size(x.h());
  const int wo = g.out_size(x.w());
  const int k = g.kernel;
  Tensor<T> y(x.n(), g.out_channels, ho, wo);
  for (int n = 0; n < x.n(); ++n) {
    for (int o = 0; o < g.out_channels; ++o) {
      for (int oy = 0; oy < ho; ++oy) {
        for (int ox = 0; ox < wo; ++ox) {
          double acc = b.empty() ? 0.0 : static_cast<double>(b[o]);
          for (int i = 0; i < g.in_channels; ++i) {
            for (int ky = 0; ky < k; ++ky) {
              const int iy = source_index(oy * g.stride - g.pad + ky, x.h(), g.padding);
              if (iy < 0) continue;
              for (int kx = 0; kx < k; ++kx) {
                const int ix = source_index(ox * g.stride - g.pad + kx, x.w(), g.padding);
                if (ix < 0) continue;
                acc += static_cast<double>(w[((static_cast<std::size_t>(o) * g.in_channels + i) * k + ky) * k + kx]) *
                       x.at(n, i, iy, ix);
              }
            }
          }
          y.at(n, o, oy, ox) = static_cast<T>(acc);
        }
      }
    }
  }
  return y;
}

template <typename T>
void conv2d_backward(const ConvGeometry& g, const Tensor<T>& x, std::span<const T> w,
                     const Tensor<T>& dy, Tensor<T>* dx, std::span<T> dw, std::span<T> db) {
  const int k = g.kernel;
  std::vector<double> gx(x.size(), 0.0);
  std::vector<double> gw(g.weight_count(), 0.0);
  std::vector<double> gb(static_cast<std::size_t>(g.out_channels), 0.0);
  for (int n = 0; n < x.n(); ++n) {
    for (int o = 0; o < g.out_channels; ++o) {
      for (int oy = 0; oy < dy.h(); ++oy) {
        for (int ox = 0; ox < dy.w(); ++ox) {
          const double grad = dy.at(n, o, oy, ox);
          gb[o] += grad;
          for (int i = 0; i < g.in_channels; ++i) {
            for (int ky = 0; ky < k; ++ky) {
              const int iy = source_index(oy * g.stride - g.pad + ky, x.h(), g.padding);
              if (iy < 0) continue;
              for (int kx = 0; kx < k; ++kx) {
                const int ix = source_index(ox * g.stride - g.pad + kx, x.w(), g.padding);
                if (ix < 0) continue;
                const std::size_t wi = ((static_cast<std::size_t>(o) * g.in_channels + i) * k + ky) * k + kx;
                gw[wi] += grad * x.at(n, i, iy, ix);
                gx[((static_cast<std::size_t>(n) * x.c() + i) * x.h() + iy) * x.w() + ix] += grad * w[wi];
              }
            }
          }
        }
      }
    }
  }
  for (std::size_t i = 0; i < gw.size() && !dw.empty(); ++i) dw[i] += static_cast<T>(gw[i]);
  for (std::size_t i = 0; i < gb.size() && !db.empty(); ++i) db[i] += static_cast<T>(gb[i]);
  if (dx) {
    *dx = Tensor<T>(x.shape());
    auto out = dx->values();
    for (std::size_t i = 0; i < gx.size(); ++i) out[i] = static_cast<T>(gx[i]);
  }
}

template <typename T>
Tensor<T> conv_transpose2d_forward(const ConvTransposeGeometry& g, const Tensor<T>& x,
                                   std::span<const T> w, std::span<const T> b) {
  g.check_input(x.shape());
  const int ho = g.out_size(x.h());
  const int wo = g.out_size(x.w());
  const int k = g.kernel;
  std::vector<double> acc(static_cast<std::size_t>(x.n()) * g.out_channels * ho * wo, 0.0);
  auto at = [&](int n, int o, int y, int xx) -> double& {
    return acc[((static_cast<std::size_t>(n) * g.out_channels + o) * ho + y) * wo + xx];
  };
  for (int n = 0; n < x.n(); ++n) {
    for (int i = 0; i < g.in_channels; ++i) {
      for (int iy = 0; iy < x.h(); ++iy) {
        for (int ix = 0; ix < x.w(); ++ix) {
          const double v = x.at(n, i, iy, ix);
          for (int o = 0; o < g.out_channels; ++o) {
            for (int ky = 0; ky < k; ++ky) {
              const int oy = iy * g.stride - g.pad + ky;
              if (oy < 0 || oy >= ho) continue;
              for (int kx = 0; kx < k; ++kx) {
                const int ox = ix * g.stride - g.pad + kx;
                if (ox < 0 || ox >= wo) continue;
                at(n, o, oy, ox) += v * w[((static_cast<std::size_t>(i) * g.out_channels + o) * k + ky) * k + kx];
              }
            }
          }
        }
      }
    }
  }
  Tensor<T> y(x.n(), g.out_channels, ho, wo);
  for (int n = 0; n < x.n(); ++n) {
    for (int o = 0; o < g.out_channels; ++o) {
      const double bias = b.empty() ? 0.0 : static_cast<double>(b[o]);
      for (int oy = 0; oy < ho; ++oy) {
        for (int ox = 0; ox < wo; ++ox) y.at(n, o, oy, ox) = static_cast<T>(at(n, o, oy, ox) + bias);
      }
    }
  }
  return y;
}

template <typename T>
void conv_transpose2d_backward(const ConvTransposeGeometry& g, const Tensor<T>& x,
                               std::span<const T> w, const Tensor<T>& dy, Tensor<T>* dx,
                               std::span<T> dw, std::span<T> db) {
  const int k = g.kernel;
  std::vector<double> gw(g.weight_count(), 0.0);
  std::vector<double> gb(static_cast<std::size_t>(g.out_channels), 0.0);
  if (dx) *dx = Tensor<T>(x.shape());
  for (int n = 0; n < x.n(); ++n) {
    for (int o = 0; o < g.out_channels; ++o) {
      for (int oy = 0; oy < dy.h(); ++oy) {
        for (int ox = 0; ox < dy.w(); ++ox) gb[o] += dy.at(n, o, oy, ox);
      }
    }
    for (int i = 0; i < g.in_channels; ++i) {
      for (int iy = 0; iy < x.h(); ++iy) {
        for (int ix = 0; ix < x.w(); ++ix) {
          const double v = x.at(n, i, iy, ix);
          double gin = 0.0;
          for (int o = 0; o < g.out_channels; ++o) {
            for (int ky = 0; ky < k; ++ky) {
              const int oy = iy * g.stride - g.pad + ky;
              if (oy < 0 || oy >= dy.h()) continue;
              for (int kx = 0; kx < k; ++kx) {
                const int ox = ix * g.stride - g.pad + kx;
                if (ox < 0 || ox >= dy.w()) continue;
                const std::size_t wi = ((static_cast<std::size_t>(i) * g.out_channels + o) * k + ky) * k + kx;
                const double grad = dy.at(n, o, oy, ox);
                gw[wi] += v * grad;
                gin += grad * w[wi];
              }
            }
          }
          if (dx) dx->at(n, i, iy, ix) = static_cast<T>(gin);
        }
      }
    }
  }
  for (std::size_t i = 0; i < gw.size() && !dw.empty(); ++i) dw[i] += static_cast<T>(gw[i]);
  for (std::size_t i = 0; i < gb.size() && !db.empty(); ++i) db[i] += static_cast<T>(gb[i]);
}

template <typename T>
Tensor<T> instance_norm_forward(const Tensor<T>& x, std::span<const T> gain, std::span<const T> bias,
                                double eps) {
  Tensor<T> y(x.shape());
  const std::size_t count = x.shape().plane();
  for (int n = 0; n < x.n(); ++n) {
    for (int c = 0; c < x.c(); ++c) {
      const T* src = x.plane(n, c);
      T* dst = y.plane(n, c);
      double mean = 0.0;
      for (std::size_t i = 0; i < count; ++i) mean += src[i];
      mean /= static_cast<double>(count);
      double var = 0.0;
      for (std::size_t i = 0; i < count; ++i) var += (src[i] - mean) * (src[i] - mean);
      var /= static_cast<double>(count);
      const double inv = 1.0 / std::sqrt(var + eps);
      for (std::size_t i = 0; i < count; ++i) {
        dst[i] = static_cast<T>(static_cast<double>(gain[c]) * (src[i] - mean) * inv + bias[c]);
      }
    }
  }
  return y;
}

template <typename T>
void instance_norm_backward(const Tensor<T>& x, std::span<const T> gain, double eps, const Tensor<T>& dy,
                            Tensor<T>* dx, std::span<T> dgain, std::span<T> dbias) {
  if (dx) *dx = Tensor<T>(x.shape());
  const std::size_t count = x.shape().plane();
  const double inv_count = 1.0 / static_cast<double>(count);
  std::vector<double> xhat(count);
  for (int n = 0; n < x.n(); ++n) {
    for (int c = 0; c < x.c(); ++c) {
      const T* src = x.plane(n, c);
      const T* g = dy.plane(n, c);
      double mean = 0.0;
      for (std::size_t i = 0; i < count; ++i) mean += src[i];
      mean *= inv_count;
      double var = 0.0;
      for (std::size_t i = 0; i < count; ++i) var += (src[i] - mean) * (src[i] - mean);
      var *= inv_count;
      const double inv = 1.0 / std::sqrt(var + eps);
      double sum_g = 0.0;
      double sum_gx = 0.0;
      for (std::size_t i = 0; i < count; ++i) {
        xhat[i] = (src[i] - mean) * inv;
        sum_g += g[i];
        sum_gx += g[i] * xhat[i];
      }
      if (!dgain.empty()) dgain[c] += static_cast<T>(sum_gx);
      if (!dbias.empty()) dbias[c] += static_cast<T>(sum_g);
      if (dx) {
        const double gc = gain[c];
        T* out = dx->plane(n, c);
        for (std::size_t i = 0; i < count; ++i) {
          out[i] = static_cast<T>(gc * inv * (g[i] - sum_g * inv_count - xhat[i] * sum_gx * inv_count));
        }
      }
    }
  }
}

#define SEAMSTAIN_INSTANTIATE(T)                                                                      \
  template Tensor<T> conv2d_forward<T>(const ConvGeometry&, const Tensor<T>&, std::span<const T>,      \
                                       std::span<const T>);                                           \
  template void conv2d_backward<T>(const ConvGeometry&, const Tensor<T>&, std::span<const T>,          \
                                   const Tensor<T>&, Tensor<T>*, std::span<T>, std::span<T>);         \
  template Tensor<T> conv_transpose2d_forward<T>(const ConvTransposeGeometry&, const Tensor<T>&,       \
                                                 std::span<const T>, std::span<const T>);             \
  template void conv_transpose2d_backward<T>(const ConvTransposeGeometry&, const Tensor<T>&,           \
                                             std::span<const T>, const Tensor<T>&, Tensor<T>*,        \
                                             std::span<T>, std::span<T>);                             \
  template Tensor<T> instance_norm_forward<T>(const Tensor<T>&, std::span<const T>, std::span<const T>, \
                                              double);                                                \
  template void instance_norm_backward<T>(const Tensor<T>&, std::span<const T>, double,                \
                                          const Tensor<T>&, Tensor<T>*, std::span<T>, std::span<T>);

SEAMSTAIN_INSTANTIATE(float)
SEAMSTAIN_INSTANTIATE(double)
#undef SEAMSTAIN_INSTANTIATE

}  // namespace kernels::reference
}  // namespace seamstain
