#pragma once

// Layer graph with hand-written backward passes.
//
// A Network owns one flat parameter vector and a matching gradient vector;
// layers are plain descriptors holding offsets into them, so copying a
// network copies its weights and the flat layout doubles as the optimizer
// and checkpoint format. Forward passes are const and record what backward
// needs on a caller-owned Tape, which lets one network be evaluated several
// times (e.g. G1 on x and on G2(y)) before a single backward sweep per tape.

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "seamstain/kernels.hpp"
#include "seamstain/tensor.hpp"

namespace seamstain {

struct ParamSlice {
  std::size_t offset = 0;
  std::size_t size = 0;
};

struct ConvLayer {
  ConvGeometry geom;
  ParamSlice weight;
  ParamSlice bias;  // size 0 when the conv is followed by a normalization
};

struct ConvTransposeLayer {
  ConvTransposeGeometry geom;
  ParamSlice weight;
  ParamSlice bias;
};

struct InstanceNormLayer {
  int channels = 0;
  double eps = 1e-5;
  ParamSlice gain;
  ParamSlice bias;
};

struct ReluLayer {};

struct LeakyReluLayer {
  double slope = 0.2;
};

struct TanhLayer {};

// x + norm2(conv2(relu(norm1(conv1(x)))))
struct ResidualLayer {
  ConvLayer conv1;
  InstanceNormLayer norm1;
  ConvLayer conv2;
  InstanceNormLayer norm2;
};

using Layer = std::variant<ConvLayer, ConvTransposeLayer, InstanceNormLayer, ReluLayer,
                           LeakyReluLayer, TanhLayer, ResidualLayer>;

// LIFO record of activations saved by forward passes.
template <typename T>
class Tape {
 public:
  void push(Tensor<T> t) { saved_.push_back(std::move(t)); }
  Tensor<T> pop() {
    Tensor<T> t = std::move(saved_.back());
    saved_.pop_back();
    return t;
  }
  bool empty() const noexcept { return saved_.empty(); }
  std::size_t depth() const noexcept { return saved_.size(); }
  void clear() { saved_.clear(); }

 private:
  std::vector<Tensor<T>> saved_;
};

template <typename T>
class Network {
 public:
  // Builders append a layer and reserve its parameters (uninitialized).
  void add_conv(const ConvGeometry& g, bool with_bias);
  void add_conv_transpose(const ConvTransposeGeometry& g, bool with_bias);
  void add_instance_norm(int channels, double eps);
  void add_relu() { layers_.emplace_back(ReluLayer{}); }
  void add_leaky_relu(double slope) { layers_.emplace_back(LeakyReluLayer{slope}); }
  void add_tanh() { layers_.emplace_back(TanhLayer{}); }
  void add_residual(int channels, double eps);

  // Conv weights ~ N(0, init_std); biases 0; norm gains 1, norm biases 0.
  void initialize(std::uint64_t seed, double init_std);

  std::size_t layer_count() const noexcept { return layers_.size(); }
  const std::vector<Layer>& layers() const noexcept { return layers_; }

  // Runs layers [first, last). With a tape, saves what backward needs.
  Tensor<T> forward(std::size_t first, std::size_t last, Tensor<T> x, Tape<T>* tape) const;
  Tensor<T> forward(Tensor<T> x, Tape<T>* tape = nullptr) const {
    return forward(0, layers_.size(), std::move(x), tape);
  }

  // Backward over layers [first, last) consuming the tape written by the
  // matching forward call. Parameter gradients accumulate into grads().
  // With want_input_grad == false the first layer skips its dx.
  Tensor<T> backward(std::size_t first, std::size_t last, Tensor<T> dy, Tape<T>& tape,
                     bool want_input_grad = true);
  Tensor<T> backward(Tensor<T> dy, Tape<T>& tape, bool want_input_grad = true) {
    return backward(0, layers_.size(), std::move(dy), tape, want_input_grad);
  }

  std::span<T> params() noexcept { return params_; }
  std::span<const T> params() const noexcept { return params_; }
  std::span<T> grads() noexcept { return grads_; }
  std::span<const T> grads() const noexcept { return grads_; }
  std::size_t parameter_count() const noexcept { return params_.size(); }
  void zero_grad();

  Backend backend() const noexcept { return backend_; }
  void set_backend(Backend b) noexcept { backend_ = b; }

  template <typename U>
  Network<U> cast() const;

 private:
  template <typename U>
  friend class Network;

  ParamSlice reserve(std::size_t n);

  std::vector<Layer> layers_;
  std::vector<T> params_;
  std::vector<T> grads_;
  Backend backend_ = Backend::parallel;
};

template <typename T>
template <typename U>
Network<U> Network<T>::cast() const {
  Network<U> out;
  out.layers_ = layers_;
  out.params_.assign(params_.begin(), params_.end());
  out.grads_.assign(grads_.size(), U{0});
  out.backend_ = backend_;
  return out;
}

bool all_finite(std::span<const float> v);
bool all_finite(std::span<const double> v);

}  // namespace seamstain
