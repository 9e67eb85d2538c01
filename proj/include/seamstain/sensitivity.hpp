#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "seamstain/inference.hpp"
#include "seamstain/synthdata.hpp"

namespace seamstain {

enum class PerturbationKind { contrast, brightness, color };
std::string to_string(PerturbationKind k);
PerturbationKind parse_perturbation_kind(const std::string& s);

struct MagnitudeRange {
  double lo, hi;
};
// contrast [0, 1.5], brightness [-0.3, 0.3], color [0.7, 1.3].
MagnitudeRange magnitude_range(PerturbationKind k);
double identity_magnitude(PerturbationKind k);  // 1, 0, 1

struct PerturbationSpec {
  PerturbationKind kind = PerturbationKind::contrast;
  std::vector<double> grid;

  // Non-empty, sorted, in range, contains the identity magnitude.
  void validate() const;
};

// Five-point grids spanning each kind's sweep range, identity in the middle.
std::vector<PerturbationSpec> default_perturbations();

// contrast:   mean_c + m (x - mean_c), per-channel mean
// brightness: x + m
// color:      x * (m, 1, 2 - m)
// Results are clipped to [0,1]. Throws InvalidArgument outside the range.
Raster perturb(const Raster& x, PerturbationKind kind, double m);

// Mean squared difference of the direction's encoder outputs.
double embedding_mse(const ModelBundle& bundle, Direction d, const Raster& x, const Raster& x_pert);

struct CurvePoint {
  std::string model;
  PerturbationKind kind = PerturbationKind::contrast;
  double magnitude = 0.0;
  double mean_mse = 0.0;
};

// For each model ("ours", "baseline") x spec x magnitude: embedding_mse
// averaged over tiles.
std::vector<CurvePoint> sweep(const ModelBundle& ours, const ModelBundle& baseline, const std::vector<Raster>& tiles,
                              const std::vector<PerturbationSpec>& specs, Direction d = Direction::x_to_y);

std::string sensitivity_csv(const std::vector<CurvePoint>& points);

// n tiles drawn without replacement (seeded) from the tile grids of the
// manifest's evaluation slides, in the direction's source domain.
std::vector<Raster> sample_eval_tiles(const Manifest& m, Direction d, int n, int tile, int overlap,
                                      std::uint64_t seed);

}  // namespace seamstain
