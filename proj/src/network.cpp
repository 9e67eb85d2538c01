#include "seamstain/network.hpp"

#include <cmath>
#include <random>

namespace seamstain {
namespace {

template <typename T>
std::span<const T> view(std::span<const T> all, const ParamSlice& s) {
  return all.subspan(s.offset, s.size);
}
template <typename T>
std::span<T> view(std::span<T> all, const ParamSlice& s) {
  return all.subspan(s.offset, s.size);
}

template <typename T>
Tensor<T> conv_fwd(Backend be, const ConvLayer& l, std::span<const T> p, const Tensor<T>& x) {
  const auto w = view(p, l.weight);
  const auto b = view(p, l.bias);
  return be == Backend::parallel ? kernels::parallel::conv2d_forward(l.geom, x, w, b)
                                 : kernels::reference::conv2d_forward(l.geom, x, w, b);
}

template <typename T>
void conv_bwd(Backend be, const ConvLayer& l, std::span<const T> p, std::span<T> g,
              const Tensor<T>& x, const Tensor<T>& dy, Tensor<T>* dx) {
  const auto w = view(p, l.weight);
  if (be == Backend::parallel) {
    kernels::parallel::conv2d_backward(l.geom, x, w, dy, dx, view(g, l.weight), view(g, l.bias));
  } else {
    kernels::reference::conv2d_backward(l.geom, x, w, dy, dx, view(g, l.weight), view(g, l.bias));
  }
}

template <typename T>
Tensor<T> norm_fwd(Backend be, const InstanceNormLayer& l, std::span<const T> p, const Tensor<T>& x) {
  const auto gain = view(p, l.gain);
  const auto bias = view(p, l.bias);
  return be == Backend::parallel ? kernels::parallel::instance_norm_forward(x, gain, bias, l.eps)
                                 : kernels::reference::instance_norm_forward(x, gain, bias, l.eps);
}

template <typename T>
void norm_bwd(Backend be, const InstanceNormLayer& l, std::span<const T> p, std::span<T> g,
              const Tensor<T>& x, const Tensor<T>& dy, Tensor<T>* dx) {
  const auto gain = view(p, l.gain);
  if (be == Backend::parallel) {
    kernels::parallel::instance_norm_backward(x, gain, l.eps, dy, dx, view(g, l.gain), view(g, l.bias));
  } else {
    kernels::reference::instance_norm_backward(x, gain, l.eps, dy, dx, view(g, l.gain), view(g, l.bias));
  }
}

template <typename T>
Tensor<T> relu(Tensor<T> x) {
  for (T& v : x.values()) v = v > T{0} ? v : T{0};
  return x;
}

template <typename T>
Tensor<T> relu_bwd(const Tensor<T>& y, Tensor<T> dy) {
  auto out = y.values();
  auto g = dy.values();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!(out[i] > T{0})) g[i] = T{0};
  }
  return dy;
}

template <typename T>
struct ForwardVisitor {
  Backend be;
  std::span<const T> p;
  Tape<T>* tape;
  Tensor<T> x;

  void save(const Tensor<T>& t) {
    if (tape) tape->push(t);
  }

  Tensor<T> operator()(const ConvLayer& l) {
    Tensor<T> y = conv_fwd(be, l, p, x);
    if (tape) tape->push(std::move(x));
    return y;
  }
  Tensor<T> operator()(const ConvTransposeLayer& l) {
    const auto w = view(p, l.weight);
    const auto b = view(p, l.bias);
    Tensor<T> y = be == Backend::parallel ? kernels::parallel::conv_transpose2d_forward(l.geom, x, w, b)
                                          : kernels::reference::conv_transpose2d_forward(l.geom, x, w, b);
    if (tape) tape->push(std::move(x));
    return y;
  }
  Tensor<T> operator()(const InstanceNormLayer& l) {
    Tensor<T> y = norm_fwd(be, l, p, x);
    if (tape) tape->push(std::move(x));
    return y;
  }
  Tensor<T> operator()(const ReluLayer&) {
    Tensor<T> y = relu(std::move(x));
    save(y);
    return y;
  }
  Tensor<T> operator()(const LeakyReluLayer& l) {
    Tensor<T> y = x;
    const T slope = static_cast<T>(l.slope);
    for (T& v : y.values()) v = v > T{0} ? v : v * slope;
    if (tape) tape->push(std::move(x));
    return y;
  }
  Tensor<T> operator()(const TanhLayer&) {
    Tensor<T> y = std::move(x);
    for (T& v : y.values()) v = std::tanh(v);
    save(y);
    return y;
  }
  Tensor<T> operator()(const ResidualLayer& l) {
    Tensor<T> a = conv_fwd(be, l.conv1, p, x);
    Tensor<T> b = norm_fwd(be, l.norm1, p, a);
    Tensor<T> c = relu(std::move(b));
    Tensor<T> d = conv_fwd(be, l.conv2, p, c);
    Tensor<T> e = norm_fwd(be, l.norm2, p, d);
    auto out = e.values();
    auto skip = x.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += skip[i];
    if (tape) {
      tape->push(std::move(x));
      tape->push(std::move(a));
      tape->push(std::move(c));
      tape->push(std::move(d));
    }
    return e;
  }
};

template <typename T>
struct BackwardVisitor {
  Backend be;
  std::span<const T> p;
  std::span<T> g;
  Tape<T>& tape;
  Tensor<T> dy;
  bool want_dx;

  Tensor<T> operator()(const ConvLayer& l) {
    Tensor<T> x = tape.pop();
    Tensor<T> dx;
    conv_bwd(be, l, p, g, x, dy, want_dx ? &dx : nullptr);
    return dx;
  }
  Tensor<T> operator()(const ConvTransposeLayer& l) {
    Tensor<T> x = tape.pop();
    Tensor<T> dx;
    const auto w = view(p, l.weight);
    if (be == Backend::parallel) {
      kernels::parallel::conv_transpose2d_backward(l.geom, x, w, dy, want_dx ? &dx : nullptr,
                                                   view(g, l.weight), view(g, l.bias));
    } else {
      kernels::reference::conv_transpose2d_backward(l.geom, x, w, dy, want_dx ? &dx : nullptr,
                                                    view(g, l.weight), view(g, l.bias));
    }
    return dx;
  }
  Tensor<T> operator()(const InstanceNormLayer& l) {
    Tensor<T> x = tape.pop();
    Tensor<T> dx;
    norm_bwd(be, l, p, g, x, dy, &dx);
    return dx;
  }
  Tensor<T> operator()(const ReluLayer&) {
    Tensor<T> y = tape.pop();
    return relu_bwd(y, std::move(dy));
  }
  Tensor<T> operator()(const LeakyReluLayer& l) {
    Tensor<T> x = tape.pop();
    auto in = x.values();
    auto grad = dy.values();
    const T slope = static_cast<T>(l.slope);
    for (std::size_t i = 0; i < grad.size(); ++i) {
      if (!(in[i] > T{0})) grad[i] *= slope;
    }
    return std::move(dy);
  }
  Tensor<T> operator()(const TanhLayer&) {
    Tensor<T> y = tape.pop();
    auto out = y.values();
    auto grad = dy.values();
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] *= T{1} - out[i] * out[i];
    return std::move(dy);
  }
  Tensor<T> operator()(const ResidualLayer& l) {
    Tensor<T> d = tape.pop();
    Tensor<T> c = tape.pop();
    Tensor<T> a = tape.pop();
    Tensor<T> x = tape.pop();
    Tensor<T> gd;
    norm_bwd(be, l.norm2, p, g, d, dy, &gd);
    Tensor<T> gc;
    conv_bwd(be, l.conv2, p, g, c, gd, &gc);
    gc = relu_bwd(c, std::move(gc));
    Tensor<T> ga;
    norm_bwd(be, l.norm1, p, g, a, gc, &ga);
    Tensor<T> gx;
    conv_bwd(be, l.conv1, p, g, x, ga, &gx);
    auto out = gx.values();
    auto skip = dy.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += skip[i];
    return gx;
  }
};

}  // namespace

template <typename T>
ParamSlice Network<T>::reserve(std::size_t n) {
  ParamSlice s{params_.size(), n};
  params_.resize(params_.size() + n, T{0});
  grads_.resize(params_.size(), T{0});
  return s;
}

template <typename T>
void Network<T>::add_conv(const ConvGeometry& g, bool with_bias) {
  ConvLayer l{g, reserve(g.weight_count()), {}};
  if (with_bias) l.bias = reserve(static_cast<std::size_t>(g.out_channels));
  layers_.emplace_back(l);
}

template <typename T>
void Network<T>::add_conv_transpose(const ConvTransposeGeometry& g, bool with_bias) {
  ConvTransposeLayer l{g, reserve(g.weight_count()), {}};
  if (with_bias) l.bias = reserve(static_cast<std::size_t>(g.out_channels));
  layers_.emplace_back(l);
}

template <typename T>
void Network<T>::add_instance_norm(int channels, double eps) {
  InstanceNormLayer l{channels, eps, {}, {}};
  l.gain = reserve(static_cast<std::size_t>(channels));
  l.bias = reserve(static_cast<std::size_t>(channels));
  layers_.emplace_back(l);
}

template <typename T>
void Network<T>::add_residual(int channels, double eps) {
  const ConvGeometry g{channels, channels, 3, 1, 1, Padding::reflect};
  ResidualLayer r;
  r.conv1 = ConvLayer{g, reserve(g.weight_count()), {}};
  r.norm1 = InstanceNormLayer{channels, eps, reserve(channels), reserve(channels)};
  r.conv2 = ConvLayer{g, reserve(g.weight_count()), {}};
  r.norm2 = InstanceNormLayer{channels, eps, reserve(channels), reserve(channels)};
  layers_.emplace_back(r);
}

template <typename T>
void Network<T>::initialize(std::uint64_t seed, double init_std) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, init_std);
  std::span<T> p(params_);
  auto gaussian = [&](const ParamSlice& s) {
    for (T& v : view(p, s)) v = static_cast<T>(normal(rng));
  };
  auto fill = [&](const ParamSlice& s, T value) {
    for (T& v : view(p, s)) v = value;
  };
  auto norm = [&](const InstanceNormLayer& l) {
    fill(l.gain, T{1});
    fill(l.bias, T{0});
  };
  for (const Layer& layer : layers_) {
    if (const auto* c = std::get_if<ConvLayer>(&layer)) {
      gaussian(c->weight);
      fill(c->bias, T{0});
    } else if (const auto* t = std::get_if<ConvTransposeLayer>(&layer)) {
      gaussian(t->weight);
      fill(t->bias, T{0});
    } else if (const auto* n = std::get_if<InstanceNormLayer>(&layer)) {
      norm(*n);
    } else if (const auto* r = std::get_if<ResidualLayer>(&layer)) {
      gaussian(r->conv1.weight);
      norm(r->norm1);
      gaussian(r->conv2.weight);
      norm(r->norm2);
    }
  }
  zero_grad();
}

template <typename T>
Tensor<T> Network<T>::forward(std::size_t first, std::size_t last, Tensor<T> x, Tape<T>* tape) const {
  for (std::size_t i = first; i < last; ++i) {
    ForwardVisitor<T> v{backend_, params_, tape, std::move(x)};
    x = std::visit(v, layers_[i]);
  }
  return x;
}

template <typename T>
Tensor<T> Network<T>::backward(std::size_t first, std::size_t last, Tensor<T> dy, Tape<T>& tape,
                               bool want_input_grad) {
  for (std::size_t i = last; i-- > first;) {
    const bool want = want_input_grad || i != first;
    BackwardVisitor<T> v{backend_, params_, grads_, tape, std::move(dy), want};
    dy = std::visit(v, layers_[i]);
  }
  return dy;
}

template <typename T>
void Network<T>::zero_grad() {
  std::fill(grads_.begin(), grads_.end(), T{0});
}

bool all_finite(std::span<const float> v) {
  for (float x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

template class Network<float>;
template class Network<double>;

}  // namespace seamstain
