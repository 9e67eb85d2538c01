#pragma once

#include <cstdint>

#include "seamstain/network.hpp"

namespace seamstain {

// ResNet generator: c7s1-b, d2b, d4b, n residual blocks at 4b channels, u2b,
// ub, c7s1-3 + tanh. The residual stack is split in two: blocks
// [0, split_index) belong to the encoder, the rest to the decoder, so the
// encoder output is the bottleneck embedding.
struct GeneratorConfig {
  int base_channels = 64;
  int n_res_blocks = 6;
  int split_index = 3;
  int io_channels = 3;
  int outer_kernel = 7;  // first and last conv; toy models use 3
  double norm_eps = 1e-5;

  // Full contract for user-facing configs (base_channels >= 8 etc.).
  void validate() const;
  // Structural minimum the network builder needs; lets tests build
  // sub-kilo-parameter models.
  void validate_structure() const;

  int embedding_channels() const noexcept { return 4 * base_channels; }
  bool operator==(const GeneratorConfig&) const = default;
};

// PatchGAN: C(b) without norm, then C(2b), C(4b), ... with instance norm,
// all LeakyReLU(0.2); the last feature layer has stride 1, the others stride
// 2; then a 1-channel stride-1 conv head. Defaults give the 70x70 variant.
struct DiscriminatorConfig {
  int base_channels = 64;
  int n_layers = 4;
  int io_channels = 3;
  int kernel = 4;
  double norm_eps = 1e-5;

  void validate() const;
  void validate_structure() const;
  bool operator==(const DiscriminatorConfig&) const = default;
};

// Receptive field in input pixels of one output logit.
int receptive_field(const DiscriminatorConfig& cfg);
// Output logit map size for a square input of side `in`.
int logit_size(const DiscriminatorConfig& cfg, int in);

template <typename T>
class Generator {
 public:
  Generator() = default;
  Generator(const GeneratorConfig& cfg, std::uint64_t seed, double init_std = 0.02);

  const GeneratorConfig& config() const noexcept { return cfg_; }

  // x: N x io x H x W with H, W divisible by 4. Returns N x 4b x H/4 x W/4.
  Tensor<T> encode(const Tensor<T>& x, Tape<T>* tape = nullptr) const;
  // f: N x 4b x h x w. Returns N x io x 4h x 4w in [-1,1].
  Tensor<T> decode(const Tensor<T>& f, Tape<T>* tape = nullptr) const;
  Tensor<T> forward(const Tensor<T>& x) const { return decode(encode(x)); }

  // Backward through the decoder; returns the gradient w.r.t. the embedding.
  Tensor<T> backward_decode(const Tensor<T>& d_out, Tape<T>& tape);
  // Backward through the encoder given the total embedding gradient.
  Tensor<T> backward_encode(const Tensor<T>& d_embedding, Tape<T>& tape, bool want_input_grad = true);

  Network<T>& network() noexcept { return net_; }
  const Network<T>& network() const noexcept { return net_; }
  std::size_t encoder_layers() const noexcept { return encoder_end_; }

  template <typename U>
  Generator<U> cast() const {
    Generator<U> g;
    g.cfg_ = cfg_;
    g.net_ = net_.template cast<U>();
    g.encoder_end_ = encoder_end_;
    return g;
  }

 private:
  template <typename U>
  friend class Generator;

  GeneratorConfig cfg_;
  Network<T> net_;
  std::size_t encoder_end_ = 0;
};

template <typename T>
class Discriminator {
 public:
  Discriminator() = default;
  Discriminator(const DiscriminatorConfig& cfg, std::uint64_t seed, double init_std = 0.02);

  const DiscriminatorConfig& config() const noexcept { return cfg_; }

  // Returns N x 1 x H'' x W'' logits. Inputs smaller than the receptive
  // field are rejected.
  Tensor<T> forward(const Tensor<T>& x, Tape<T>* tape = nullptr) const;
  Tensor<T> backward(const Tensor<T>& d_logits, Tape<T>& tape, bool want_input_grad = true);

  Network<T>& network() noexcept { return net_; }
  const Network<T>& network() const noexcept { return net_; }

  template <typename U>
  Discriminator<U> cast() const {
    Discriminator<U> d;
    d.cfg_ = cfg_;
    d.net_ = net_.template cast<U>();
    return d;
  }

 private:
  template <typename U>
  friend class Discriminator;

  DiscriminatorConfig cfg_;
  Network<T> net_;
};

}  // namespace seamstain
