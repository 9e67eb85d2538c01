#include <Eigen/Core>
#include <omp.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "seamstain/kernels.hpp"

namespace seamstain::kernels::parallel {
namespace {

template <typename T>
using RowMajor = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMajor<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMajor<T>>;

// Scratch buffers reused across calls on the calling thread.
template <typename T>
std::vector<T>& scratch(int slot) {
  thread_local std::vector<T> buffers[2];
  return buffers[slot];
}

// Per-axis source index for every (output position, kernel tap), -1 = zero.
std::vector<int> axis_map(int out, int in, int kernel, int stride, int pad, Padding mode) {
  std::vector<int> map(static_cast<std::size_t>(kernel) * out);
  for (int k = 0; k < kernel; ++k) {
    for (int o = 0; o < out; ++o) {
      const int i = o * stride - pad + k;
      int src = -1;
      if (i >= 0 && i < in) {
        src = i;
      } else if (mode == Padding::reflect) {
        src = reflect_index(i, in);
      }
      map[static_cast<std::size_t>(k) * out + o] = src;
    }
  }
  return map;
}

struct Patches {
  int channels, height, width;  // source image
  int out_h, out_w;             // patch grid
  int kernel;
  std::vector<int> ymap, xmap;
  // Per kx, the ox range [lo, hi) on which x(ox, kx) == ox + shift exactly.
  std::vector<int> run_lo, run_hi;

  Patches(int c, int h, int w, int kernel_, int stride, int pad, Padding mode)
      : channels(c), height(h), width(w),
        out_h((h + 2 * pad - kernel_) / stride + 1), out_w((w + 2 * pad - kernel_) / stride + 1),
        kernel(kernel_), ymap(axis_map(out_h, h, kernel_, stride, pad, mode)),
        xmap(axis_map(out_w, w, kernel_, stride, pad, mode)), run_lo(kernel_, 0), run_hi(kernel_, 0) {
    if (stride != 1) return;
    for (int kx = 0; kx < kernel; ++kx) {
      run_lo[kx] = std::clamp(pad - kx, 0, out_w);
      run_hi[kx] = std::clamp(w + pad - kx, run_lo[kx], out_w);
    }
  }

  std::size_t rows() const { return static_cast<std::size_t>(channels) * kernel * kernel; }
  std::size_t cols() const { return static_cast<std::size_t>(out_h) * out_w; }
};

// cols[(c, ky, kx)][(oy - oy0, ox)] = src[c][y(oy,ky)][x(ox,kx)] for output
// rows oy0 <= oy < oy1.
template <typename T>
void im2col(const Patches& p, const T* src, T* cols, int oy0, int oy1) {
  const int k = p.kernel;
  const std::size_t ncols = static_cast<std::size_t>(oy1 - oy0) * p.out_w;
#pragma omp parallel for schedule(static)
  for (int row = 0; row < static_cast<int>(p.rows()); ++row) {
    const int c = row / (k * k);
    const int ky = (row / k) % k;
    const int kx = row % k;
    const T* plane = src + static_cast<std::size_t>(c) * p.height * p.width;
    const int* ym = p.ymap.data() + static_cast<std::size_t>(ky) * p.out_h;
    const int* xm = p.xmap.data() + static_cast<std::size_t>(kx) * p.out_w;
    T* dst = cols + static_cast<std::size_t>(row) * ncols;
    for (int oy = oy0; oy < oy1; ++oy) {
      T* out = dst + static_cast<std::size_t>(oy - oy0) * p.out_w;
      const int sy = ym[oy];
      if (sy < 0) {
        std::fill(out, out + p.out_w, T{0});
        continue;
      }
      const T* line = plane + static_cast<std::size_t>(sy) * p.width;
      const int lo = p.run_lo[kx], hi = p.run_hi[kx];
      for (int ox = 0; ox < lo; ++ox) out[ox] = xm[ox] < 0 ? T{0} : line[xm[ox]];
      if (hi > lo) std::copy(line + xm[lo], line + xm[lo] + (hi - lo), out + lo);
      for (int ox = hi; ox < p.out_w; ++ox) out[ox] = xm[ox] < 0 ? T{0} : line[xm[ox]];
    }
  }
}

// Adjoint of im2col over the same row band: dst[c][y][x] += every cols entry
// that reads it. Parallel over channels, so each destination plane has a
// single writer.
template <typename T>
void col2im(const Patches& p, const T* cols, T* dst, int oy0, int oy1) {
  const int k = p.kernel;
  const std::size_t ncols = static_cast<std::size_t>(oy1 - oy0) * p.out_w;
#pragma omp parallel for schedule(static)
  for (int c = 0; c < p.channels; ++c) {
    T* plane = dst + static_cast<std::size_t>(c) * p.height * p.width;
    for (int ky = 0; ky < k; ++ky) {
      const int* ym = p.ymap.data() + static_cast<std::size_t>(ky) * p.out_h;
      for (int kx = 0; kx < k; ++kx) {
        const int* xm = p.xmap.data() + static_cast<std::size_t>(kx) * p.out_w;
        const T* src = cols + ((static_cast<std::size_t>(c) * k + ky) * k + kx) * ncols;
        for (int oy = oy0; oy < oy1; ++oy) {
          const int sy = ym[oy];
          if (sy < 0) continue;
          T* line = plane + static_cast<std::size_t>(sy) * p.width;
          const T* in = src + static_cast<std::size_t>(oy - oy0) * p.out_w;
          const int lo = p.run_lo[kx], hi = p.run_hi[kx];
          for (int ox = 0; ox < lo; ++ox) {
            if (xm[ox] >= 0) line[xm[ox]] += in[ox];
          }
          if (hi > lo) {
            T* run = line + xm[lo] - lo;
            for (int ox = lo; ox < hi; ++ox) run[ox] += in[ox];
          }
          for (int ox = hi; ox < p.out_w; ++ox) {
            if (xm[ox] >= 0) line[xm[ox]] += in[ox];
          }
        }
      }
    }
  }
}

// Output-row bands whose patch matrix stays within a cache-sized budget.
struct Bands {
  int rows_per_band;
  int total;
  Bands(const Patches& p, std::size_t elem) {
    constexpr std::size_t kBudget = std::size_t{1} << 19;
    const std::size_t per_row = p.rows() * p.out_w * elem;
    rows_per_band = static_cast<int>(std::clamp<std::size_t>(kBudget / std::max<std::size_t>(per_row, 1), 1,
                                                             static_cast<std::size_t>(p.out_h)));
    total = p.out_h;
  }
  template <typename F>
  void each(F&& f) const {
    for (int y0 = 0; y0 < total; y0 += rows_per_band) f(y0, std::min(total, y0 + rows_per_band));
  }
};

int chunk_count(std::size_t extent) {
  const int threads = omp_get_max_threads();
  return static_cast<int>(std::max<std::size_t>(1, std::min<std::size_t>(threads, extent / 64)));
}

template <typename T>
using Strided = Eigen::Map<RowMajor<T>, 0, Eigen::OuterStride<>>;
template <typename T>
using ConstStrided = Eigen::Map<const RowMajor<T>, 0, Eigen::OuterStride<>>;

// C(m x n) = A(m x k) * B(k x n); B and C rows are ldb / ldc apart.
template <typename T>
void gemm_nn(const T* a, const T* b, T* c, int m, int k, int n, int ldb, int ldc) {
  ConstMatMap<T> A(a, m, k);
  ConstStrided<T> B(b, k, n, Eigen::OuterStride<>(ldb));
  Strided<T> C(c, m, n, Eigen::OuterStride<>(ldc));
  const int chunks = chunk_count(static_cast<std::size_t>(n));
  if (chunks == 1) {
    C.noalias() = A * B;
    return;
  }
#pragma omp parallel for schedule(static)
  for (int t = 0; t < chunks; ++t) {
    const int j0 = static_cast<int>(static_cast<long>(n) * t / chunks);
    const int j1 = static_cast<int>(static_cast<long>(n) * (t + 1) / chunks);
    C.middleCols(j0, j1 - j0).noalias() = A * B.middleCols(j0, j1 - j0);
  }
}

// C(m x n) = A(k x m)^T * B(k x n); B and C rows are ldb / ldc apart.
template <typename T>
void gemm_tn(const T* a, const T* b, T* c, int m, int k, int n, int ldb, int ldc) {
  ConstMatMap<T> A(a, k, m);
  ConstStrided<T> B(b, k, n, Eigen::OuterStride<>(ldb));
  Strided<T> C(c, m, n, Eigen::OuterStride<>(ldc));
  const int chunks = chunk_count(static_cast<std::size_t>(n));
  if (chunks == 1) {
    C.noalias() = A.transpose() * B;
    return;
  }
#pragma omp parallel for schedule(static)
  for (int t = 0; t < chunks; ++t) {
    const int j0 = static_cast<int>(static_cast<long>(n) * t / chunks);
    const int j1 = static_cast<int>(static_cast<long>(n) * (t + 1) / chunks);
    C.middleCols(j0, j1 - j0).noalias() = A.transpose() * B.middleCols(j0, j1 - j0);
  }
}

// C(m x n) += A(m x k) * B(n x k)^T; A and B rows are lda / ldb apart.
template <typename T>
void gemm_nt_acc(const T* a, const T* b, T* c, int m, int k, int n, int lda, int ldb) {
  ConstStrided<T> A(a, m, k, Eigen::OuterStride<>(lda));
  ConstStrided<T> B(b, n, k, Eigen::OuterStride<>(ldb));
  MatMap<T> C(c, m, n);
  const int chunks = std::max(1, std::min(omp_get_max_threads(), m));
  if (chunks == 1) {
    C.noalias() += A * B.transpose();
    return;
  }
#pragma omp parallel for schedule(static)
  for (int t = 0; t < chunks; ++t) {
    const int i0 = m * t / chunks;
    const int i1 = m * (t + 1) / chunks;
    C.middleRows(i0, i1 - i0).noalias() += A.middleRows(i0, i1 - i0) * B.transpose();
  }
}

template <typename T>
void add_bias(T* y, std::span<const T> b, std::size_t plane) {
  if (b.empty()) return;
#pragma omp parallel for schedule(static)
  for (int o = 0; o < static_cast<int>(b.size()); ++o) {
    T* p = y + static_cast<std::size_t>(o) * plane;
    const T v = b[o];
    for (std::size_t i = 0; i < plane; ++i) p[i] += v;
  }
}

template <typename T>
void accumulate_bias_grad(const T* dy, std::span<T> db, std::size_t plane) {
  if (db.empty()) return;
#pragma omp parallel for schedule(static)
  for (int o = 0; o < static_cast<int>(db.size()); ++o) {
    const T* p = dy + static_cast<std::size_t>(o) * plane;
    double acc = 0.0;
    for (std::size_t i = 0; i < plane; ++i) acc += p[i];
    db[o] += static_cast<T>(acc);
  }
}

}  // namespace

template <typename T>
Tensor<T> conv2d_forward(const ConvGeometry& g, const Tensor<T>& x, std::span<const T> w,
                         std::span<const T> b) {
  g.check_input(x.shape());
  const Patches p(x.c(), x.h(), x.w(), g.kernel, g.stride, g.pad, g.padding);
  const Bands bands(p, sizeof(T));
  const int plane = static_cast<int>(p.cols());
  const int rows = static_cast<int>(p.rows());
  Tensor<T> y(x.n(), g.out_channels, p.out_h, p.out_w);
  auto& cols = scratch<T>(0);
  cols.resize(p.rows() * bands.rows_per_band * p.out_w);
  for (int n = 0; n < x.n(); ++n) {
    bands.each([&](int y0, int y1) {
      const int width = (y1 - y0) * p.out_w;
      im2col(p, x.item(n), cols.data(), y0, y1);
      gemm_nn(w.data(), cols.data(), y.item(n) + static_cast<std::size_t>(y0) * p.out_w, g.out_channels, rows,
              width, width, plane);
    });
    add_bias(y.item(n), b, p.cols());
  }
  return y;
}

template <typename T>
void conv2d_backward(const ConvGeometry& g, const Tensor<T>& x, std::span<const T> w,
                     const Tensor<T>& dy, Tensor<T>* dx, std::span<T> dw, std::span<T> db) {
  const Patches p(x.c(), x.h(), x.w(), g.kernel, g.stride, g.pad, g.padding);
  const Bands bands(p, sizeof(T));
  const int plane = static_cast<int>(p.cols());
  const int rows = static_cast<int>(p.rows());
  const std::size_t block = p.rows() * bands.rows_per_band * p.out_w;
  auto& cols = scratch<T>(0);
  auto& dcols = scratch<T>(1);
  if (!dw.empty()) cols.resize(block);
  if (dx) {
    *dx = Tensor<T>(x.shape());
    dcols.resize(block);
  }
  for (int n = 0; n < x.n(); ++n) {
    accumulate_bias_grad(dy.item(n), db, p.cols());
    bands.each([&](int y0, int y1) {
      const int width = (y1 - y0) * p.out_w;
      const T* g_band = dy.item(n) + static_cast<std::size_t>(y0) * p.out_w;
      if (!dw.empty()) {
        im2col(p, x.item(n), cols.data(), y0, y1);
        gemm_nt_acc(g_band, cols.data(), dw.data(), g.out_channels, width, rows, plane, width);
      }
      if (dx) {
        gemm_tn(w.data(), g_band, dcols.data(), rows, g.out_channels, width, plane, width);
        col2im(p, dcols.data(), dx->item(n), y0, y1);
      }
    });
  }
}

// The transposed convolution is the adjoint of a convolution that maps the
// (larger) output grid back onto the input grid; both passes reuse its
// patch layout.
template <typename T>
Tensor<T> conv_transpose2d_forward(const ConvTransposeGeometry& g, const Tensor<T>& x,
                                   std::span<const T> w, std::span<const T> b) {
  g.check_input(x.shape());
  const int ho = g.out_size(x.h());
  const int wo = g.out_size(x.w());
  const Patches p(g.out_channels, ho, wo, g.kernel, g.stride, g.pad, Padding::zero);
  const Bands bands(p, sizeof(T));
  const int plane = static_cast<int>(p.cols());
  const int rows = static_cast<int>(p.rows());
  Tensor<T> y(x.n(), g.out_channels, ho, wo);
  auto& cols = scratch<T>(0);
  cols.resize(p.rows() * bands.rows_per_band * p.out_w);
  for (int n = 0; n < x.n(); ++n) {
    bands.each([&](int y0, int y1) {
      const int width = (y1 - y0) * p.out_w;
      gemm_tn(w.data(), x.item(n) + static_cast<std::size_t>(y0) * p.out_w, cols.data(), rows, g.in_channels,
              width, plane, width);
      col2im(p, cols.data(), y.item(n), y0, y1);
    });
    add_bias(y.item(n), b, static_cast<std::size_t>(ho) * wo);
  }
  return y;
}

template <typename T>
void conv_transpose2d_backward(const ConvTransposeGeometry& g, const Tensor<T>& x,
                               std::span<const T> w, const Tensor<T>& dy, Tensor<T>* dx,
                               std::span<T> dw, std::span<T> db) {
  const Patches p(g.out_channels, dy.h(), dy.w(), g.kernel, g.stride, g.pad, Padding::zero);
  const Bands bands(p, sizeof(T));
  const int plane = static_cast<int>(p.cols());
  const int rows = static_cast<int>(p.rows());
  auto& cols = scratch<T>(0);
  cols.resize(p.rows() * bands.rows_per_band * p.out_w);
  if (dx) *dx = Tensor<T>(x.shape());
  for (int n = 0; n < x.n(); ++n) {
    accumulate_bias_grad(dy.item(n), db, static_cast<std::size_t>(dy.h()) * dy.w());
    bands.each([&](int y0, int y1) {
      const int width = (y1 - y0) * p.out_w;
      const std::size_t offset = static_cast<std::size_t>(y0) * p.out_w;
      im2col(p, dy.item(n), cols.data(), y0, y1);
      if (!dw.empty()) {
        gemm_nt_acc(x.item(n) + offset, cols.data(), dw.data(), g.in_channels, width, rows, plane, width);
      }
      if (dx) gemm_nn(w.data(), cols.data(), dx->item(n) + offset, g.in_channels, rows, width, width, plane);
    });
  }
}

template <typename T>
Tensor<T> instance_norm_forward(const Tensor<T>& x, std::span<const T> gain, std::span<const T> bias,
                                double eps) {
  Tensor<T> y(x.shape());
  const std::size_t count = x.shape().plane();
  const int planes = x.n() * x.c();
#pragma omp parallel for schedule(static)
  for (int pi = 0; pi < planes; ++pi) {
    const int c = pi % x.c();
    const T* src = x.data() + static_cast<std::size_t>(pi) * count;
    T* dst = y.data() + static_cast<std::size_t>(pi) * count;
    double sum = 0.0;
    for (std::size_t i = 0; i < count; ++i) sum += src[i];
    const double mean = sum / static_cast<double>(count);
    double sq = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
      const double d = src[i] - mean;
      sq += d * d;
    }
    const double inv = 1.0 / std::sqrt(sq / static_cast<double>(count) + eps);
    const T scale = static_cast<T>(gain[c] * inv);
    const T shift = static_cast<T>(bias[c] - gain[c] * mean * inv);
    for (std::size_t i = 0; i < count; ++i) dst[i] = src[i] * scale + shift;
  }
  return y;
}

template <typename T>
void instance_norm_backward(const Tensor<T>& x, std::span<const T> gain, double eps, const Tensor<T>& dy,
                            Tensor<T>* dx, std::span<T> dgain, std::span<T> dbias) {
  if (dx) *dx = Tensor<T>(x.shape());
  const std::size_t count = x.shape().plane();
  const double inv_count = 1.0 / static_cast<double>(count);
  // Per-channel parameter gradients are summed over the batch after the
  // parallel loop so that every accumulation has a single writer.
  std::vector<double> pg(static_cast<std::size_t>(x.n()) * x.c());
  std::vector<double> pb(pg.size());
  const int planes = x.n() * x.c();
#pragma omp parallel for schedule(static)
  for (int pi = 0; pi < planes; ++pi) {
    const int c = pi % x.c();
    const T* src = x.data() + static_cast<std::size_t>(pi) * count;
    const T* g = dy.data() + static_cast<std::size_t>(pi) * count;
    double sum = 0.0;
    for (std::size_t i = 0; i < count; ++i) sum += src[i];
    const double mean = sum * inv_count;
    double sq = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
      const double d = src[i] - mean;
      sq += d * d;
    }
    const double inv = 1.0 / std::sqrt(sq * inv_count + eps);
    double sum_g = 0.0;
    double sum_gx = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
      sum_g += g[i];
      sum_gx += g[i] * ((src[i] - mean) * inv);
    }
    pg[pi] = sum_gx;
    pb[pi] = sum_g;
    if (dx) {
      const double gc = gain[c];
      const double a = gc * inv;
      const double mg = sum_g * inv_count;
      const double mgx = sum_gx * inv_count;
      T* out = dx->data() + static_cast<std::size_t>(pi) * count;
      for (std::size_t i = 0; i < count; ++i) {
        const double xhat = (src[i] - mean) * inv;
        out[i] = static_cast<T>(a * (g[i] - mg - xhat * mgx));
      }
    }
  }
  for (int pi = 0; pi < planes; ++pi) {
    const int c = pi % x.c();
    if (!dgain.empty()) dgain[c] += static_cast<T>(pg[pi]);
    if (!dbias.empty()) dbias[c] += static_cast<T>(pb[pi]);
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

}  // namespace seamstain::kernels::parallel
