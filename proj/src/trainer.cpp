#include "seamstain/trainer.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <sstream>

#include "seamstain/checkpoint.hpp"
#include "seamstain/image_io.hpp"
#include "seamstain/objective.hpp"
#include "seamstain/raster.hpp"
#include "seamstain/synthdata.hpp"

namespace seamstain {

void TrainConfig::validate() const {
  if (epochs < 1) throw InvalidArgument("epochs must be >= 1");
  if (batch < 1) throw InvalidArgument("batch must be >= 1");
  if (!(lr > 0.0)) throw InvalidArgument("lr must be positive");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw InvalidArgument("adam betas must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw InvalidArgument("adam eps must be positive");
  if (pool_size < 0) throw InvalidArgument("pool_size must be >= 0");
  if (checkpoint_every < 0) throw InvalidArgument("checkpoint_every must be >= 0");
  if (log_every < 0) throw InvalidArgument("log_every must be >= 0");
  weights.validate();
  generator.validate();
  discriminator.validate();
}

Tensor<float> ImagePool::query(const Tensor<float>& image, std::mt19937_64& rng) {
  if (image.n() != 1) throw ShapeMismatch("ImagePool::query expects a single image");
  if (capacity_ == 0) return image;
  if (static_cast<int>(images_.size()) < capacity_) {
    images_.push_back(image);
    return image;
  }
  if (unit_interval(rng()) < 0.5) return image;
  const std::size_t idx = rng() % static_cast<std::uint64_t>(capacity_);
  Tensor<float> old = std::move(images_[idx]);
  images_[idx] = image;
  return old;
}

Tensor<float> ImagePool::query_batch(const Tensor<float>& images, std::mt19937_64& rng) {
  if (images.n() == 1) return query(images, rng);
  std::vector<Tensor<float>> picked;
  picked.reserve(static_cast<std::size_t>(images.n()));
  for (int i = 0; i < images.n(); ++i) picked.push_back(query(slice_batch(images, i), rng));
  std::vector<const Tensor<float>*> ptrs;
  for (const auto& t : picked) ptrs.push_back(&t);
  return stack_batch<float>(ptrs);
}

void adam_step(std::span<float> params, std::span<const float> grads, AdamState& state, const AdamConfig& cfg) {
  if (grads.size() != params.size()) throw ShapeMismatch("adam_step: params/grads size mismatch");
  if (state.m.size() != params.size()) {
    state.m.assign(params.size(), 0.0f);
    state.v.assign(params.size(), 0.0f);
  }
  ++state.t;
  const double b1 = cfg.beta1;
  const double b2 = cfg.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(params.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const double g = grads[i];
    const double m = b1 * state.m[i] + (1.0 - b1) * g;
    const double v = b2 * state.v[i] + (1.0 - b2) * g * g;
    state.m[i] = static_cast<float>(m);
    state.v[i] = static_cast<float>(v);
    params[i] = static_cast<float>(params[i] - cfg.lr * (m / c1) / (std::sqrt(v / c2) + cfg.eps));
  }
}

ModelBundle make_bundle(const GeneratorConfig& gen, const DiscriminatorConfig& disc, std::uint64_t seed,
                        int pool_size) {
  ModelBundle b;
  b.generator = gen;
  b.discriminator = disc;
  b.g1 = Generator<float>(gen, mix_seed(seed, 1));
  b.g2 = Generator<float>(gen, mix_seed(seed, 2));
  b.d1 = Discriminator<float>(disc, mix_seed(seed, 3));
  b.d2 = Discriminator<float>(disc, mix_seed(seed, 4));
  b.pool_x = ImagePool(pool_size);
  b.pool_y = ImagePool(pool_size);
  b.rng.seed(mix_seed(seed, 5));
  b.seed = seed;
  return b;
}

namespace {

void require_finite_grads(Network<float>& net, const char* who, std::int64_t step) {
  if (!all_finite(std::span<const float>(net.grads()))) {
    throw DivergenceError(std::string("non-finite gradient in ") + who, step);
  }
}

}  // namespace

LossBreakdown train_step(ModelBundle& bundle, const Tensor<float>& x, const Tensor<float>& y,
                         const TrainConfig& cfg) {
  const AdamConfig adam{cfg.lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps};
  ObjectiveConfig obj;
  obj.weights = cfg.weights;
  obj.adversarial = cfg.adversarial;
  obj.reduction = cfg.reduction;

  bundle.g1.network().zero_grad();
  bundle.g2.network().zero_grad();
  GeneratorPass<float> pass =
      generator_objective(bundle.g1, bundle.g2, bundle.d1, bundle.d2, x, y, obj, /*backprop=*/true);
  LossBreakdown losses = total_objective(pass.losses, cfg.weights, bundle.step);
  require_finite_grads(bundle.g1.network(), "G1", bundle.step);
  require_finite_grads(bundle.g2.network(), "G2", bundle.step);

  const Tensor<float> pooled_fake_x = bundle.pool_x.query_batch(pass.fake_x, bundle.rng);
  const Tensor<float> pooled_fake_y = bundle.pool_y.query_batch(pass.fake_y, bundle.rng);

  // The discriminators score pooled fakes that do not depend on the update
  // below, so both generator steps can be applied first.
  adam_step(bundle.g1.network().params(), bundle.g1.network().grads(), bundle.opt_g1, adam);
  adam_step(bundle.g2.network().params(), bundle.g2.network().grads(), bundle.opt_g2, adam);

  bundle.d1.network().zero_grad();
  bundle.d2.network().zero_grad();
  losses.adv_D1 = discriminator_objective(bundle.d1, x, pooled_fake_x, cfg.adversarial, true);
  losses.adv_D2 = discriminator_objective(bundle.d2, y, pooled_fake_y, cfg.adversarial, true);
  if (!std::isfinite(losses.adv_D1) || !std::isfinite(losses.adv_D2)) {
    throw DivergenceError("non-finite discriminator loss", bundle.step);
  }
  require_finite_grads(bundle.d1.network(), "D1", bundle.step);
  require_finite_grads(bundle.d2.network(), "D2", bundle.step);
  adam_step(bundle.d1.network().params(), bundle.d1.network().grads(), bundle.opt_d1, adam);
  adam_step(bundle.d2.network().params(), bundle.d2.network().grads(), bundle.opt_d2, adam);
  ++bundle.step;
  return losses;
}

namespace {

std::vector<int> shuffled(int n, std::uint64_t seed) {
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  // Fisher-Yates with an explicit modulo draw; std::shuffle's distribution is
  // implementation-defined and would make schedules library-dependent.
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
    std::swap(idx[i], idx[j]);
  }
  return idx;
}

}  // namespace

std::vector<std::pair<int, int>> epoch_schedule(int nx, int ny, std::uint64_t seed, int epoch) {
  if (nx <= 0 || ny <= 0) throw InvalidArgument("epoch_schedule: both domains need at least one image");
  const auto xs = shuffled(nx, mix_seed(seed, 1000 + 2 * static_cast<std::uint64_t>(epoch)));
  const auto ys = shuffled(ny, mix_seed(seed, 1001 + 2 * static_cast<std::uint64_t>(epoch)));
  const int len = std::max(nx, ny);
  std::vector<std::pair<int, int>> out;
  out.reserve(static_cast<std::size_t>(len));
  for (int i = 0; i < len; ++i) out.emplace_back(xs[i % nx], ys[i % ny]);
  return out;
}

const char* const kLossLogHeader = "step,adv_G1,adv_G2,adv_D1,adv_D2,cyc,embd,total_G";

std::string loss_log_row(std::int64_t step, const LossBreakdown& l) {
  std::ostringstream os;
  os << std::setprecision(17) << step << ',' << l.adv_G1 << ',' << l.adv_G2 << ',' << l.adv_D1 << ','
     << l.adv_D2 << ',' << l.cyc << ',' << l.embd << ',' << l.total_G;
  return os.str();
}

namespace {

std::vector<Tensor<float>> load_tiles(const std::vector<std::filesystem::path>& paths) {
  std::vector<Tensor<float>> out(paths.size());
  std::vector<std::string> errors(paths.size());
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(paths.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      out[i] = to_model_input<float>(read_png(paths[i]));
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw IoError(e);
  }
  return out;
}

Tensor<float> make_batch(const std::vector<Tensor<float>>& pool, std::span<const int> idx) {
  if (idx.size() == 1) return pool[idx[0]];
  std::vector<const Tensor<float>*> ptrs;
  for (int i : idx) ptrs.push_back(&pool[i]);
  return stack_batch<float>(ptrs);
}

}  // namespace

TrainResult train(const Manifest& manifest, const TrainConfig& cfg, const std::filesystem::path& out_dir,
                  const std::filesystem::path& resume_from) {
  cfg.validate();
  const auto xs = load_tiles(manifest.train_paths(Domain::X));
  const auto ys = load_tiles(manifest.train_paths(Domain::Y));
  if (xs.empty() || ys.empty()) throw InvalidArgument("train: manifest has no training tiles for a domain");

  ModelBundle bundle;
  if (resume_from.empty()) {
    bundle = make_bundle(cfg.generator, cfg.discriminator, cfg.seed, cfg.pool_size);
  } else {
    bundle = load_checkpoint(resume_from);
    if (!(bundle.generator == cfg.generator) || !(bundle.discriminator == cfg.discriminator)) {
      throw InvalidArgument("train: checkpoint architecture differs from the configuration");
    }
    if (bundle.seed != cfg.seed) throw InvalidArgument("train: checkpoint seed differs from the configuration");
  }

  std::filesystem::create_directories(out_dir);
  TrainResult result;
  result.log = out_dir / "train_log.csv";
  const bool append = !resume_from.empty() && std::filesystem::exists(result.log);
  std::ofstream log(result.log, append ? std::ios::app : std::ios::trunc);
  if (!log) throw IoError("cannot write " + result.log.string());
  if (!append) log << kLossLogHeader << '\n';

  const int len = std::max(static_cast<int>(xs.size()), static_cast<int>(ys.size()));
  const std::int64_t batches_per_epoch = (len + cfg.batch - 1) / cfg.batch;

  for (int epoch = bundle.epoch; epoch < cfg.epochs; ++epoch) {
    const auto schedule = epoch_schedule(static_cast<int>(xs.size()), static_cast<int>(ys.size()), bundle.seed, epoch);
    const std::int64_t first = bundle.step - static_cast<std::int64_t>(epoch) * batches_per_epoch;
    for (std::int64_t b = std::max<std::int64_t>(first, 0); b < batches_per_epoch; ++b) {
      const int lo = static_cast<int>(b * cfg.batch);
      const int hi = std::min(len, lo + cfg.batch);
      std::vector<int> xi, yi;
      for (int i = lo; i < hi; ++i) {
        xi.push_back(schedule[i].first);
        yi.push_back(schedule[i].second);
      }
      const std::int64_t step = bundle.step;
      const LossBreakdown l = train_step(bundle, make_batch(xs, xi), make_batch(ys, yi), cfg);
      log << loss_log_row(step, l) << '\n';
      if (cfg.log_every > 0 && step % cfg.log_every == 0) {
        std::cout << "epoch " << epoch << " step " << step << " total_G " << l.total_G << " cyc " << l.cyc
                  << " embd " << l.embd << std::endl;
      }
    }
    bundle.epoch = epoch + 1;
    log.flush();
    if (cfg.checkpoint_every > 0 && bundle.epoch % cfg.checkpoint_every == 0) {
      save_checkpoint(out_dir / ("epoch_" + std::to_string(bundle.epoch) + ".ckpt"), bundle);
    }
  }
  result.checkpoint = out_dir / "final.ckpt";
  save_checkpoint(result.checkpoint, bundle);
  result.steps = bundle.step;
  return result;
}

}  // namespace seamstain
