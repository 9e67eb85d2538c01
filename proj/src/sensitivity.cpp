#include "seamstain/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "seamstain/image_io.hpp"
#include "seamstain/seeding.hpp"

namespace seamstain {

std::string to_string(PerturbationKind k) {
  switch (k) {
    case PerturbationKind::contrast: return "contrast";
    case PerturbationKind::brightness: return "brightness";
    case PerturbationKind::color: return "color";
  }
  return "?";
}

PerturbationKind parse_perturbation_kind(const std::string& s) {
  if (s == "contrast") return PerturbationKind::contrast;
  if (s == "brightness") return PerturbationKind::brightness;
  if (s == "color") return PerturbationKind::color;
  throw InvalidArgument("unknown perturbation kind '" + s + "'");
}

MagnitudeRange magnitude_range(PerturbationKind k) {
  switch (k) {
    case PerturbationKind::contrast: return {0.0, 1.5};
    case PerturbationKind::brightness: return {-0.3, 0.3};
    case PerturbationKind::color: return {0.7, 1.3};
  }
  return {0.0, 0.0};
}

double identity_magnitude(PerturbationKind k) { return k == PerturbationKind::brightness ? 0.0 : 1.0; }

void PerturbationSpec::validate() const {
  if (grid.empty()) throw InvalidArgument("perturbation grid is empty");
  if (!std::is_sorted(grid.begin(), grid.end())) throw InvalidArgument("perturbation grid must be sorted");
  const MagnitudeRange r = magnitude_range(kind);
  for (double m : grid) {
    if (!(m >= r.lo && m <= r.hi)) throw InvalidArgument(to_string(kind) + " magnitude out of range");
  }
  if (std::find(grid.begin(), grid.end(), identity_magnitude(kind)) == grid.end()) {
    throw InvalidArgument(to_string(kind) + " grid must include the identity magnitude");
  }
}

std::vector<PerturbationSpec> default_perturbations() {
  return {{PerturbationKind::contrast, {0.5, 0.75, 1.0, 1.25, 1.5}},
          {PerturbationKind::brightness, {-0.3, -0.15, 0.0, 0.15, 0.3}},
          {PerturbationKind::color, {0.7, 0.85, 1.0, 1.15, 1.3}}};
}

Raster perturb(const Raster& x, PerturbationKind kind, double m) {
  const MagnitudeRange r = magnitude_range(kind);
  if (!(m >= r.lo && m <= r.hi)) throw InvalidArgument(to_string(kind) + " magnitude out of range");
  if (m == identity_magnitude(kind)) return x;
  Raster out = x;
  auto v = out.values();
  const int ch = x.channels();
  const std::size_t pixels = v.size() / ch;
  auto clip = [](double t) { return static_cast<float>(std::clamp(t, 0.0, 1.0)); };
  switch (kind) {
    case PerturbationKind::contrast: {
      std::vector<double> mean(ch, 0.0);
      for (std::size_t p = 0; p < pixels; ++p) {
        for (int c = 0; c < ch; ++c) mean[c] += v[p * ch + c];
      }
      for (double& mu : mean) mu /= static_cast<double>(pixels);
      for (std::size_t p = 0; p < pixels; ++p) {
        for (int c = 0; c < ch; ++c) v[p * ch + c] = clip(mean[c] + m * (v[p * ch + c] - mean[c]));
      }
      break;
    }
    case PerturbationKind::brightness:
      for (float& t : v) t = clip(t + m);
      break;
    case PerturbationKind::color: {
      if (ch != 3) throw InvalidArgument("color perturbation needs an RGB raster");
      const double gain[3] = {m, 1.0, 2.0 - m};
      for (std::size_t p = 0; p < pixels; ++p) {
        for (int c = 0; c < 3; ++c) v[p * 3 + c] = clip(gain[c] * v[p * 3 + c]);
      }
      break;
    }
  }
  return out;
}

namespace {

double mse(const Tensor<float>& a, const Tensor<float>& b) {
  require_same_shape(a.shape(), b.shape(), "embedding_mse");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a.data()[i]) - b.data()[i];
    s += d * d;
  }
  return s / static_cast<double>(a.size());
}

Tensor<float> embed(const ModelBundle& bundle, Direction d, const Raster& x) {
  return generator_for(bundle, d).encode(to_model_input<float>(x));
}

}  // namespace

double embedding_mse(const ModelBundle& bundle, Direction d, const Raster& x, const Raster& x_pert) {
  if (!x.same_dims(x_pert)) throw ShapeMismatch("embedding_mse: images differ in size");
  return mse(embed(bundle, d, x), embed(bundle, d, x_pert));
}

std::vector<CurvePoint> sweep(const ModelBundle& ours, const ModelBundle& baseline, const std::vector<Raster>& tiles,
                              const std::vector<PerturbationSpec>& specs, Direction d) {
  if (tiles.empty()) throw InvalidArgument("sweep: no tiles");
  for (const auto& s : specs) s.validate();
  std::vector<CurvePoint> out;
  for (const auto& [name, bundle] : {std::pair<const char*, const ModelBundle*>{"ours", &ours},
                                     std::pair<const char*, const ModelBundle*>{"baseline", &baseline}}) {
    std::vector<Tensor<float>> base_embeddings;
    for (const Raster& t : tiles) base_embeddings.push_back(embed(*bundle, d, t));
    for (const auto& spec : specs) {
      for (double m : spec.grid) {
        double total = 0.0;
        for (std::size_t i = 0; i < tiles.size(); ++i) {
          if (m == identity_magnitude(spec.kind)) continue;
          total += mse(base_embeddings[i], embed(*bundle, d, perturb(tiles[i], spec.kind, m)));
        }
        out.push_back({name, spec.kind, m, total / static_cast<double>(tiles.size())});
      }
    }
  }
  return out;
}

std::string sensitivity_csv(const std::vector<CurvePoint>& points) {
  std::ostringstream os;
  os.precision(12);
  os << "model,kind,magnitude,mean_mse\n";
  for (const auto& p : points) os << p.model << ',' << to_string(p.kind) << ',' << p.magnitude << ',' << p.mean_mse << '\n';
  return os.str();
}

std::vector<Raster> sample_eval_tiles(const Manifest& m, Direction d, int n, int tile, int overlap,
                                      std::uint64_t seed) {
  if (n <= 0) throw InvalidArgument("sample_eval_tiles: n must be positive");
  const auto slides = m.eval_slides();
  if (slides.empty()) throw InvalidArgument("sample_eval_tiles: manifest has no evaluation slides");
  struct Ref {
    std::size_t slide;
    int x, y;
  };
  std::vector<Raster> images;
  std::vector<Ref> refs;
  for (std::size_t s = 0; s < slides.size(); ++s) {
    images.push_back(read_png(m.resolve(d == Direction::x_to_y ? slides[s]->x_path : slides[s]->y_path)));
    const TilePlan plan = plan_tiles(images.back().width(), images.back().height(), tile, overlap);
    for (const auto& [x, y] : plan.origins) refs.push_back({s, x, y});
  }
  std::mt19937_64 rng(mix_seed(seed, 77));
  const std::size_t take = std::min(refs.size(), static_cast<std::size_t>(n));
  // Partial Fisher-Yates: the first `take` entries become the sample.
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t j = i + rng() % (refs.size() - i);
    std::swap(refs[i], refs[j]);
  }
  std::vector<Raster> out;
  for (std::size_t i = 0; i < take; ++i) out.push_back(crop(images[refs[i].slide], refs[i].x, refs[i].y, tile, tile));
  return out;
}

}  // namespace seamstain
