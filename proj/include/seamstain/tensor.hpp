#pragma once

#include <algorithm>
#include <cstddef>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "seamstain/errors.hpp"

namespace seamstain {

// N x C x H x W, row-major with W fastest.
struct Shape {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;

  std::size_t size() const noexcept {
    return static_cast<std::size_t>(n) * c * h * w;
  }
  std::size_t plane() const noexcept { return static_cast<std::size_t>(h) * w; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

template <typename T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T{0}) : shape_(shape), data_(shape.size(), fill) {}
  Tensor(int n, int c, int h, int w, T fill = T{0}) : Tensor(Shape{n, c, h, w}, fill) {}

  const Shape& shape() const noexcept { return shape_; }
  int n() const noexcept { return shape_.n; }
  int c() const noexcept { return shape_.c; }
  int h() const noexcept { return shape_.h; }
  int w() const noexcept { return shape_.w; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }
  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }

  T* plane(int n, int c) noexcept { return data_.data() + offset(n, c, 0, 0); }
  const T* plane(int n, int c) const noexcept { return data_.data() + offset(n, c, 0, 0); }
  // All channels of one batch item.
  T* item(int n) noexcept { return plane(n, 0); }
  const T* item(int n) const noexcept { return plane(n, 0); }

  T& at(int n, int c, int y, int x) noexcept { return data_[offset(n, c, y, x)]; }
  const T& at(int n, int c, int y, int x) const noexcept { return data_[offset(n, c, y, x)]; }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  bool operator==(const Tensor&) const = default;

 private:
  std::size_t offset(int n, int c, int y, int x) const noexcept {
    return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + y) * shape_.w + x;
  }

  Shape shape_{};
  std::vector<T> data_;
};

template <typename To, typename From>
Tensor<To> tensor_cast(const Tensor<From>& src) {
  Tensor<To> out(src.shape());
  auto in = src.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < in.size(); ++i) dst[i] = static_cast<To>(in[i]);
  return out;
}

// Stacks single-item tensors of identical C,H,W along N.
template <typename T>
Tensor<T> stack_batch(std::span<const Tensor<T>* const> items) {
  if (items.empty()) throw InvalidArgument("stack_batch: no items");
  const Shape s = items.front()->shape();
  int total = 0;
  for (const Tensor<T>* t : items) total += t->n();
  Tensor<T> out(Shape{total, s.c, s.h, s.w});
  std::size_t at = 0;
  for (const Tensor<T>* t : items) {
    if (t->c() != s.c || t->h() != s.h || t->w() != s.w) {
      throw ShapeMismatch("stack_batch: " + t->shape().str() + " vs " + s.str());
    }
    std::memcpy(out.data() + at, t->data(), t->size() * sizeof(T));
    at += t->size();
  }
  return out;
}

template <typename T>
Tensor<T> slice_batch(const Tensor<T>& t, int index) {
  Tensor<T> out(Shape{1, t.c(), t.h(), t.w()});
  std::memcpy(out.data(), t.item(index), out.size() * sizeof(T));
  return out;
}

inline void require_same_shape(const Shape& a, const Shape& b, const char* what) {
  if (!(a == b)) {
    throw ShapeMismatch(std::string(what) + ": " + a.str() + " vs " + b.str());
  }
}

}  // namespace seamstain
