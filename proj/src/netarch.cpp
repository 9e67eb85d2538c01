#include "seamstain/netarch.hpp"

#include <algorithm>
#include <string>

namespace seamstain {

void GeneratorConfig::validate_structure() const {
  if (base_channels < 1) throw InvalidArgument("generator: base_channels must be >= 1");
  if (n_res_blocks < 0) throw InvalidArgument("generator: n_res_blocks must be >= 0");
  if (split_index < 0 || split_index > n_res_blocks) {
    throw InvalidArgument("generator: split_index must lie in [0, n_res_blocks]");
  }
  if (io_channels < 1) throw InvalidArgument("generator: io_channels must be >= 1");
  if (outer_kernel < 1 || outer_kernel % 2 == 0) {
    throw InvalidArgument("generator: outer_kernel must be odd and positive");
  }
  if (!(norm_eps > 0.0)) throw InvalidArgument("generator: norm_eps must be > 0");
}

void GeneratorConfig::validate() const {
  validate_structure();
  if (base_channels < 8) throw InvalidArgument("generator: base_channels must be >= 8");
  if (io_channels != 3) throw InvalidArgument("generator: io_channels must be 3");
}

void DiscriminatorConfig::validate_structure() const {
  if (base_channels < 1) throw InvalidArgument("discriminator: base_channels must be >= 1");
  if (n_layers < 1) throw InvalidArgument("discriminator: n_layers must be >= 1");
  if (kernel < 2) throw InvalidArgument("discriminator: kernel must be >= 2");
  if (!(norm_eps > 0.0)) throw InvalidArgument("discriminator: norm_eps must be > 0");
}

void DiscriminatorConfig::validate() const {
  validate_structure();
  if (base_channels < 8) throw InvalidArgument("discriminator: base_channels must be >= 8");
  if (io_channels != 3) throw InvalidArgument("discriminator: io_channels must be 3");
}

namespace {

int layer_stride(const DiscriminatorConfig& cfg, int i) {
  // Feature layers 0..n-1; the last one keeps resolution. A single-layer
  // discriminator keeps its only layer strided.
  if (cfg.n_layers == 1) return 2;
  return i < cfg.n_layers - 1 ? 2 : 1;
}

int pad_for(int kernel) { return (kernel - 1) / 2; }

}  // namespace

int receptive_field(const DiscriminatorConfig& cfg) {
  int rf = cfg.kernel;  // head
  for (int i = cfg.n_layers - 1; i >= 0; --i) rf = (rf - 1) * layer_stride(cfg, i) + cfg.kernel;
  return rf;
}

int logit_size(const DiscriminatorConfig& cfg, int in) {
  const int pad = pad_for(cfg.kernel);
  int s = in;
  for (int i = 0; i < cfg.n_layers; ++i) s = (s + 2 * pad - cfg.kernel) / layer_stride(cfg, i) + 1;
  return (s + 2 * pad - cfg.kernel) + 1;
}

template <typename T>
Generator<T>::Generator(const GeneratorConfig& cfg, std::uint64_t seed, double init_std) : cfg_(cfg) {
  cfg.validate_structure();
  const int b = cfg.base_channels;
  const int outer_pad = cfg.outer_kernel / 2;
  const double eps = cfg.norm_eps;

  net_.add_conv({cfg.io_channels, b, cfg.outer_kernel, 1, outer_pad, Padding::reflect}, false);
  net_.add_instance_norm(b, eps);
  net_.add_relu();
  net_.add_conv({b, 2 * b, 3, 2, 1, Padding::reflect}, false);
  net_.add_instance_norm(2 * b, eps);
  net_.add_relu();
  net_.add_conv({2 * b, 4 * b, 3, 2, 1, Padding::reflect}, false);
  net_.add_instance_norm(4 * b, eps);
  net_.add_relu();
  for (int i = 0; i < cfg.split_index; ++i) net_.add_residual(4 * b, eps);
  encoder_end_ = net_.layer_count();

  for (int i = cfg.split_index; i < cfg.n_res_blocks; ++i) net_.add_residual(4 * b, eps);
  net_.add_conv_transpose({4 * b, 2 * b, 3, 2, 1, 1}, false);
  net_.add_instance_norm(2 * b, eps);
  net_.add_relu();
  net_.add_conv_transpose({2 * b, b, 3, 2, 1, 1}, false);
  net_.add_instance_norm(b, eps);
  net_.add_relu();
  net_.add_conv({b, cfg.io_channels, cfg.outer_kernel, 1, outer_pad, Padding::reflect}, true);
  net_.add_tanh();

  net_.initialize(seed, init_std);
}

template <typename T>
Tensor<T> Generator<T>::encode(const Tensor<T>& x, Tape<T>* tape) const {
  if (x.c() != cfg_.io_channels) {
    throw ShapeMismatch("encode: expected " + std::to_string(cfg_.io_channels) + " channels, got " +
                        x.shape().str());
  }
  if (x.h() % 4 != 0 || x.w() % 4 != 0 || x.h() == 0 || x.w() == 0) {
    throw ShapeMismatch("encode: spatial dims must be positive multiples of 4, got " + x.shape().str());
  }
  return net_.forward(0, encoder_end_, x, tape);
}

template <typename T>
Tensor<T> Generator<T>::decode(const Tensor<T>& f, Tape<T>* tape) const {
  if (f.c() != cfg_.embedding_channels()) {
    throw ShapeMismatch("decode: expected " + std::to_string(cfg_.embedding_channels()) +
                        " embedding channels, got " + f.shape().str());
  }
  return net_.forward(encoder_end_, net_.layer_count(), f, tape);
}

template <typename T>
Tensor<T> Generator<T>::backward_decode(const Tensor<T>& d_out, Tape<T>& tape) {
  return net_.backward(encoder_end_, net_.layer_count(), d_out, tape, true);
}

template <typename T>
Tensor<T> Generator<T>::backward_encode(const Tensor<T>& d_embedding, Tape<T>& tape, bool want_input_grad) {
  return net_.backward(0, encoder_end_, d_embedding, tape, want_input_grad);
}

template <typename T>
Discriminator<T>::Discriminator(const DiscriminatorConfig& cfg, std::uint64_t seed, double init_std)
    : cfg_(cfg) {
  cfg.validate_structure();
  const int b = cfg.base_channels;
  const int k = cfg.kernel;
  const int pad = pad_for(k);
  int channels = b;
  net_.add_conv({cfg.io_channels, b, k, layer_stride(cfg, 0), pad, Padding::zero}, true);
  net_.add_leaky_relu(0.2);
  for (int i = 1; i < cfg.n_layers; ++i) {
    const int next = b * std::min(1 << i, 8);
    net_.add_conv({channels, next, k, layer_stride(cfg, i), pad, Padding::zero}, false);
    net_.add_instance_norm(next, cfg.norm_eps);
    net_.add_leaky_relu(0.2);
    channels = next;
  }
  net_.add_conv({channels, 1, k, 1, pad, Padding::zero}, true);
  net_.initialize(seed, init_std);
}

template <typename T>
Tensor<T> Discriminator<T>::forward(const Tensor<T>& x, Tape<T>* tape) const {
  const int rf = receptive_field(cfg_);
  if (x.h() < rf || x.w() < rf) {
    throw ShapeMismatch("discriminate: input " + x.shape().str() + " smaller than the " +
                        std::to_string(rf) + "x" + std::to_string(rf) + " receptive field");
  }
  if (x.c() != cfg_.io_channels) throw ShapeMismatch("discriminate: channel mismatch " + x.shape().str());
  return net_.forward(x, tape);
}

template <typename T>
Tensor<T> Discriminator<T>::backward(const Tensor<T>& d_logits, Tape<T>& tape, bool want_input_grad) {
  return net_.backward(d_logits, tape, want_input_grad);
}

template class Generator<float>;
template class Generator<double>;
template class Discriminator<float>;
template class Discriminator<double>;

}  // namespace seamstain
