#pragma once

// Convolution and instance-normalization kernels in two flavours:
//
//   kernels::reference  direct nested loops, single threaded, no scratch
//                       buffers. Kept as the ground truth for tests.
//   kernels::parallel   im2col + GEMM, OpenMP over independent outputs.
//                       Used by the networks.
//
// Both flavours share signatures so call sites switch on Backend only.
// Weight layouts follow the usual conventions:
//   conv2d            [out][in][k][k]
//   conv_transpose2d  [in][out][k][k]
// Gradient outputs (dw, db) are accumulated into, never overwritten; dx is
// overwritten. An empty bias span means "no bias".

#include <span>

#include "seamstain/tensor.hpp"

namespace seamstain {

enum class Padding { zero, reflect };

enum class Backend { reference, parallel };

struct ConvGeometry {
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 3;
  int stride = 1;
  int pad = 0;
  Padding padding = Padding::zero;

  int out_size(int in) const noexcept { return (in + 2 * pad - kernel) / stride + 1; }
  std::size_t weight_count() const noexcept {
    return static_cast<std::size_t>(out_channels) * in_channels * kernel * kernel;
  }
  // Throws if a (h,w) input cannot be convolved (too small, reflection pad
  // wider than the input, wrong channel count).
  void check_input(const Shape& s) const;
};

// Fractionally strided convolution; zero padding semantics only.
struct ConvTransposeGeometry {
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 3;
  int stride = 2;
  int pad = 1;
  int output_pad = 1;

  int out_size(int in) const noexcept {
    return (in - 1) * stride - 2 * pad + kernel + output_pad;
  }
  std::size_t weight_count() const noexcept {
    return static_cast<std::size_t>(in_channels) * out_channels * kernel * kernel;
  }
  void check_input(const Shape& s) const;
};

namespace kernels {

#define SEAMSTAIN_KERNEL_DECLS                                                                 \
  template <typename T>                                                                        \
  Tensor<T> conv2d_forward(const ConvGeometry& g, const Tensor<T>& x, std::span<const T> w,     \
                           std::span<const T> b);                                              \
  template <typename T>                                                                        \
  void conv2d_backward(const ConvGeometry& g, const Tensor<T>& x, std::span<const T> w,         \
                       const Tensor<T>& dy, Tensor<T>* dx, std::span<T> dw, std::span<T> db);  \
  template <typename T>                                                                        \
  Tensor<T> conv_transpose2d_forward(const ConvTransposeGeometry& g, const Tensor<T>& x,        \
                                     std::span<const T> w, std::span<const T> b);              \
  template <typename T>                                                                        \
  void conv_transpose2d_backward(const ConvTransposeGeometry& g, const Tensor<T>& x,            \
                                 std::span<const T> w, const Tensor<T>& dy, Tensor<T>* dx,     \
                                 std::span<T> dw, std::span<T> db);                            \
  template <typename T>                                                                        \
  Tensor<T> instance_norm_forward(const Tensor<T>& x, std::span<const T> gain,                 \
                                  std::span<const T> bias, double eps);                        \
  template <typename T>                                                                        \
  void instance_norm_backward(const Tensor<T>& x, std::span<const T> gain, double eps,         \
                              const Tensor<T>& dy, Tensor<T>* dx, std::span<T> dgain,          \
                              std::span<T> dbias);

namespace reference {
SEAMSTAIN_KERNEL_DECLS
}  // namespace reference

namespace parallel {
SEAMSTAIN_KERNEL_DECLS
}  // namespace parallel

#undef SEAMSTAIN_KERNEL_DECLS

// Index of a padded coordinate in [-pad, n + pad) after reflection about the
// edge samples (the edge itself is not repeated).
inline int reflect_index(int i, int n) noexcept {
  if (i < 0) return -i;
  if (i >= n) return 2 * n - 2 - i;
  return i;
}

}  // namespace kernels
}  // namespace seamstain
