#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <json.hpp>

#include "seamstain/inference.hpp"
#include "seamstain/metrics.hpp"
#include "seamstain/sensitivity.hpp"
#include "seamstain/synthdata.hpp"
#include "seamstain/trainer.hpp"

namespace seamstain {

// Two training arms that differ only in the embedding weight: "ours" uses
// ours_w_embd, "baseline" uses 0. Everything else, including the seed, is
// shared.
struct AblationConfig {
  DatasetConfig data;
  TrainConfig train;
  std::vector<std::uint64_t> seeds{0, 1, 2};
  double ours_w_embd = 10.0;
  int infer_tile = 0;      // 0: the dataset tile size
  int infer_overlap = -1;  // < 0: the dataset overlap
  Blend blend = Blend::nearest_center;
  int fov = 256;
  PyramidConfig pyramid;
  int sensitivity_tiles = 100;
  std::vector<PerturbationSpec> perturbations = default_perturbations();
  Direction direction = Direction::x_to_y;
  bool plot = true;

  int tile() const noexcept { return infer_tile > 0 ? infer_tile : data.tile; }
  int overlap() const noexcept { return infer_overlap >= 0 ? infer_overlap : data.overlap; }
  void validate() const;
};

void to_json(nlohmann::json& j, const AblationConfig& c);
void from_json(const nlohmann::json& j, AblationConfig& c);

struct SeedOutcome {
  std::uint64_t seed = 0;
  std::filesystem::path ckpt_ours;
  std::filesystem::path ckpt_baseline;
  EvalReport eval_ours;
  EvalReport eval_baseline;
  std::vector<ArtifactRow> seams;
  std::vector<CurvePoint> sensitivity;
  double seam_ours = 0.0;  // median over evaluation slides
  double seam_baseline = 0.0;
  // ours <= baseline at every non-identity magnitude of every kind
  bool sensitivity_ordered = false;
};

struct AblationResult {
  std::vector<SeedOutcome> seeds;
  double seam_ours = 0.0;  // medians over seeds
  double seam_baseline = 0.0;
  double cwssim_ours = 0.0;  // median over seeds of the per-seed overall median
  double cwssim_baseline = 0.0;
  int sensitivity_seeds_ordered = 0;
  std::filesystem::path summary;
};

// Trains (or reuses / resumes) one arm in `dir`. A run is reused when
// dir/train_config.json matches `cfg` and dir/final.ckpt exists, resumed from
// the newest dir/epoch_<k>.ckpt when the config matches but the run is
// incomplete, and started afresh otherwise.
std::filesystem::path train_arm(const Manifest& manifest, const TrainConfig& cfg, const std::filesystem::path& dir);

// synth -> train both arms per seed -> infer -> CWSSIM -> seams ->
// sensitivity. Writes summary.md, table1.csv, seams.csv and sensitivity.csv
// (plus sensitivity.png when plot is set) into out_dir. The dataset is
// reused when out_dir/data holds one built from the same configuration.
AblationResult run_ablation(const AblationConfig& cfg, const std::filesystem::path& out_dir);

// Writes the JSON dump of `j` to path, creating parent directories.
void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace seamstain
