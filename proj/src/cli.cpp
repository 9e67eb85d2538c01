#include "seamstain/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>

#include "seamstain/checkpoint.hpp"
#include "seamstain/config_json.hpp"
#include "seamstain/image_io.hpp"
#include "seamstain/pipeline.hpp"
#include "seamstain/plot.hpp"

namespace seamstain {

namespace {

using nlohmann::json;

// Raised for anything wrong with the invocation or configuration (exit 2).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A subcommand's effective configuration is a JSON object: the --config file
// (if any) with each given flag written over it at the flag's JSON pointer.
class Command {
 public:
  Command(CLI::App& parent, const std::string& name, const std::string& help) {
    app_ = parent.add_subcommand(name, help);
    app_->add_option("--config", config_path_, "JSON configuration file (flags override it)");
  }

  template <typename T>
  Command& flag(const std::string& names, const std::string& pointer, const std::string& help) {
    auto holder = std::make_shared<std::optional<T>>();
    app_->add_option(names, *holder, help);
    overrides_.push_back([holder, pointer](json& j) {
      if (*holder) j[json::json_pointer(pointer)] = **holder;
    });
    return *this;
  }

  bool parsed() const { return app_->parsed(); }

  json effective() const {
    json j = json::object();
    if (!config_path_.empty()) {
      try {
        j = read_json(config_path_);
      } catch (const std::exception& e) {
        throw UsageError(e.what());
      }
      if (!j.is_object()) throw UsageError("--config must hold a JSON object");
    }
    for (const auto& apply : overrides_) apply(j);
    return j;
  }

 private:
  CLI::App* app_ = nullptr;
  std::string config_path_;
  std::vector<std::function<void(json&)>> overrides_;
};

std::string require_string(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_string() || j.at(key).get<std::string>().empty()) {
    throw UsageError(std::string("missing required setting '") + key + "'");
  }
  return j.at(key).get<std::string>();
}

template <typename T>
T value_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw UsageError(std::string("bad value for '") + key + "': " + e.what());
  }
}

void only_keys(const json& j, std::initializer_list<const char*> keys, const char* what) {
  try {
    json_detail::require_known_keys(j, keys, what);
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
}

template <typename T>
T section(const json& j, const char* key) {
  T out{};
  if (!j.contains(key)) return out;
  try {
    from_json(j.at(key), out);
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  return out;
}

std::filesystem::path echo_dir_for_file(const std::string& out) {
  const auto parent = std::filesystem::path(out).parent_path();
  return parent.empty() ? std::filesystem::path(".") : parent;
}

// Validates inside a usage context: InvalidArgument becomes exit code 2.
template <typename F>
void validated(F&& f) {
  try {
    f();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
}

// ------------------------------------------------------------------ commands

int cmd_synth(const json& j) {
  only_keys(j, {"out", "synth"}, "synth");
  const std::string out = require_string(j, "out");
  const auto cfg = section<DatasetConfig>(j, "synth");
  validated([&] { cfg.validate(); });
  const Manifest m = build_dataset(cfg, out);
  write_json(std::filesystem::path(out) / "synth_config.json", json{{"out", out}, {"synth", cfg}});
  std::size_t x = m.train_paths(Domain::X).size(), y = m.train_paths(Domain::Y).size();
  std::cout << "wrote " << x << " X tiles, " << y << " Y tiles, " << m.eval_slides().size() << " eval slides to "
            << out << '\n';
  return 0;
}

int cmd_train(const json& j) {
  only_keys(j, {"manifest", "out", "resume", "train"}, "train");
  const std::string manifest_path = require_string(j, "manifest");
  const std::string out = require_string(j, "out");
  const std::string resume = value_or<std::string>(j, "resume", "");
  const auto cfg = section<TrainConfig>(j, "train");
  validated([&] { cfg.validate(); });
  json echo{{"manifest", manifest_path}, {"out", out}, {"train", cfg}};
  if (!resume.empty()) echo["resume"] = resume;
  write_json(std::filesystem::path(out) / "train_config.json", echo);
  const TrainResult r = train(read_manifest(manifest_path), cfg, out, resume);
  std::cout << "trained " << r.steps << " steps; checkpoint " << r.checkpoint.string() << '\n';
  return 0;
}

int cmd_infer(const json& j) {
  only_keys(j, {"ckpt", "direction", "in", "out", "tile", "overlap", "blend"}, "infer");
  const std::string ckpt = require_string(j, "ckpt");
  const std::string in = require_string(j, "in");
  const std::string out = require_string(j, "out");
  Direction dir{};
  Blend blend{};
  validated([&] {
    dir = parse_direction(value_or<std::string>(j, "direction", "X2Y"));
    blend = parse_blend(value_or<std::string>(j, "blend", "nearest_center"));
  });
  const int tile = value_or(j, "tile", 128);
  const int overlap = value_or(j, "overlap", 32);
  write_json(echo_dir_for_file(out) / "infer_config.json",
             json{{"ckpt", ckpt},
                  {"direction", to_string(dir)},
                  {"in", in},
                  {"out", out},
                  {"tile", tile},
                  {"overlap", overlap},
                  {"blend", to_string(blend)}});
  const ModelBundle bundle = load_checkpoint(ckpt);
  write_png(out, translate_slide(bundle, dir, read_png(in), tile, overlap, blend));
  return 0;
}

int cmd_eval(const json& j) {
  only_keys(j, {"virtual", "real", "fov", "out", "nested_name", "pyramid"}, "eval");
  const std::string virt = require_string(j, "virtual");
  const std::string real = require_string(j, "real");
  const std::string out = value_or<std::string>(j, "out", "");
  const int fov = value_or(j, "fov", 256);
  const std::string nested = value_or<std::string>(j, "nested_name", "Y.png");
  const auto pyramid = section<PyramidConfig>(j, "pyramid");
  validated([&] { pyramid.validate(); });
  if (!out.empty()) {
    write_json(echo_dir_for_file(out) / "eval_config.json",
               json{{"virtual", virt}, {"real", real}, {"fov", fov}, {"out", out}, {"nested_name", nested},
                    {"pyramid", pyramid}});
  }
  EvalReport rep;
  validated([&] { rep = evaluate_pairs(virt, real, fov, pyramid, nested); });
  if (!out.empty()) {
    std::ofstream f(out, std::ios::trunc);
    if (!f) throw IoError("cannot write " + out);
    f << eval_csv(rep);
  }
  for (const auto& s : rep.per_slide) std::cout << s.slide_id << ": " << format_summary(s.summary) << '\n';
  std::cout << format_summary(rep.overall) << '\n';
  return 0;
}

int cmd_sensitivity(const json& j) {
  only_keys(j,
            {"ckpt_ours", "ckpt_base", "manifest", "n_tiles", "out", "plot", "direction", "seed", "tile", "overlap"},
            "sensitivity");
  const std::string ours_path = require_string(j, "ckpt_ours");
  const std::string base_path = require_string(j, "ckpt_base");
  const std::string manifest_path = require_string(j, "manifest");
  const std::string out = require_string(j, "out");
  const std::string plot = value_or<std::string>(j, "plot", "");
  const int n_tiles = value_or(j, "n_tiles", 100);
  const auto seed = value_or<std::uint64_t>(j, "seed", 0);
  Direction dir{};
  validated([&] { dir = parse_direction(value_or<std::string>(j, "direction", "X2Y")); });
  const Manifest manifest = read_manifest(manifest_path);
  const int tile = value_or(j, "tile", manifest.tile);
  const int overlap = value_or(j, "overlap", manifest.overlap);
  json echo{{"ckpt_ours", ours_path}, {"ckpt_base", base_path}, {"manifest", manifest_path},
            {"n_tiles", n_tiles},     {"out", out},             {"direction", to_string(dir)},
            {"seed", seed},           {"tile", tile},           {"overlap", overlap}};
  if (!plot.empty()) echo["plot"] = plot;
  write_json(echo_dir_for_file(out) / "sensitivity_config.json", echo);

  const ModelBundle ours = load_checkpoint(ours_path);
  const ModelBundle base = load_checkpoint(base_path);
  std::vector<Raster> tiles;
  validated([&] { tiles = sample_eval_tiles(manifest, dir, n_tiles, tile, overlap, seed); });
  const auto specs = default_perturbations();
  const auto points = sweep(ours, base, tiles, specs, dir);
  {
    std::ofstream f(out, std::ios::trunc);
    if (!f) throw IoError("cannot write " + out);
    f << sensitivity_csv(points);
  }
  if (!plot.empty()) {
    std::vector<Panel> panels;
    for (const auto& spec : specs) {
      Panel p;
      Series so{spec.grid, {}, 0.1f, 0.3f, 0.85f}, sb{spec.grid, {}, 0.85f, 0.2f, 0.15f};
      for (const auto& pt : points) {
        if (pt.kind != spec.kind) continue;
        (pt.model == "ours" ? so : sb).y.push_back(pt.mean_mse);
      }
      p.series = {so, sb};
      panels.push_back(std::move(p));
    }
    write_line_chart(plot, panels);
  }
  return 0;
}

int cmd_seam_report(const json& j) {
  only_keys(j, {"ckpt_ours", "ckpt_base", "manifest", "tile", "overlap", "out", "direction"}, "seam-report");
  const std::string ours_path = require_string(j, "ckpt_ours");
  const std::string base_path = require_string(j, "ckpt_base");
  const std::string manifest_path = require_string(j, "manifest");
  const std::string out = require_string(j, "out");
  Direction dir{};
  validated([&] { dir = parse_direction(value_or<std::string>(j, "direction", "X2Y")); });
  const Manifest manifest = read_manifest(manifest_path);
  const int tile = value_or(j, "tile", manifest.tile);
  const int overlap = value_or(j, "overlap", manifest.overlap);
  write_json(echo_dir_for_file(out) / "seam_report_config.json",
             json{{"ckpt_ours", ours_path}, {"ckpt_base", base_path}, {"manifest", manifest_path}, {"tile", tile},
                  {"overlap", overlap}, {"out", out}, {"direction", to_string(dir)}});
  std::vector<NamedSlide> slides;
  for (const SlideRecord* s : manifest.eval_slides()) {
    slides.push_back({s->id, read_png(manifest.resolve(dir == Direction::x_to_y ? s->x_path : s->y_path))});
  }
  if (slides.empty()) throw UsageError("manifest has no evaluation slides");
  const auto rows = artifact_report(load_checkpoint(ours_path), load_checkpoint(base_path), slides, tile, overlap, dir);
  std::ofstream f(out, std::ios::trunc);
  if (!f) throw IoError("cannot write " + out);
  f << artifact_csv(rows);
  return 0;
}

int cmd_ablate(const json& j) {
  only_keys(j, {"out", "ablate"}, "ablate");
  const std::string out = require_string(j, "out");
  const auto cfg = section<AblationConfig>(j, "ablate");
  validated([&] { cfg.validate(); });
  const AblationResult r = run_ablation(cfg, out);
  std::cout << "summary: " << r.summary.string() << '\n';
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Tile-based stain-to-stain translation with embedding consistency"};
  app.require_subcommand(1);

  Command synth(app, "synth", "Generate the synthetic dual-stain dataset");
  synth.flag<std::string>("--out", "/out", "Output directory")
      .flag<std::uint64_t>("--seed", "/synth/seed", "Dataset seed")
      .flag<int>("--n-train", "/synth/n_train_slides", "Training slides (split evenly into X and Y)")
      .flag<int>("--n-eval", "/synth/n_eval_slides", "Evaluation slide pairs")
      .flag<int>("--tile", "/synth/tile", "Training tile size")
      .flag<int>("--overlap", "/synth/overlap", "Training tile overlap")
      .flag<int>("--width", "/synth/slide/width", "Slide width")
      .flag<int>("--height", "/synth/slide/height", "Slide height")
      .flag<double>("--density", "/synth/slide/nucleus_density", "Nuclei per 10^4 px^2")
      .flag<int>("--regions", "/synth/slide/region_count", "Tissue regions per slide");

  Command train_cmd(app, "train", "Train G1/G2/D1/D2 on a dataset manifest");
  train_cmd.flag<std::string>("--manifest", "/manifest", "Dataset manifest.json")
      .flag<std::string>("--out", "/out", "Output directory")
      .flag<std::string>("--resume", "/resume", "Checkpoint to continue from")
      .flag<int>("--epochs", "/train/epochs", "Epochs")
      .flag<std::uint64_t>("--seed", "/train/seed", "Training seed")
      .flag<double>("--lr", "/train/lr", "Adam learning rate")
      .flag<double>("--w-cyc", "/train/loss_weights/cyc", "Cycle loss weight")
      .flag<double>("--w-embd", "/train/loss_weights/embd", "Embedding consistency weight (0 = baseline)")
      .flag<int>("--base-channels", "/train/generator/base_channels", "Generator base channels")
      .flag<int>("--disc-channels", "/train/discriminator/base_channels", "Discriminator base channels")
      .flag<int>("--split-index", "/train/generator/split_index", "Residual blocks in the encoder")
      .flag<int>("--checkpoint-every", "/train/checkpoint_every", "Epochs between checkpoints");

  Command infer(app, "infer", "Translate a slide tile by tile");
  infer.flag<std::string>("--ckpt", "/ckpt", "Checkpoint")
      .flag<std::string>("--dir", "/direction", "X2Y or Y2X")
      .flag<std::string>("--in", "/in", "Input slide PNG")
      .flag<std::string>("--out", "/out", "Output PNG")
      .flag<int>("--tile", "/tile", "Tile size")
      .flag<int>("--overlap", "/overlap", "Tile overlap")
      .flag<std::string>("--blend", "/blend", "nearest_center, average or feather");

  Command eval(app, "eval", "CWSSIM between virtual and real slides");
  eval.flag<std::string>("--virtual", "/virtual", "Directory of virtual slides")
      .flag<std::string>("--real", "/real", "Directory of real slides")
      .flag<int>("--fov", "/fov", "Field-of-view size")
      .flag<std::string>("--out", "/out", "Per-FoV CSV")
      .flag<std::string>("--nested-name", "/nested_name", "File name inside per-slide subdirectories");

  Command sens(app, "sensitivity", "Embedding MSE under input perturbations");
  sens.flag<std::string>("--ckpt-ours", "/ckpt_ours", "Checkpoint trained with the embedding term")
      .flag<std::string>("--ckpt-base", "/ckpt_base", "Baseline checkpoint")
      .flag<std::string>("--manifest", "/manifest", "Dataset manifest.json (tiles come from eval slides)")
      .flag<int>("--n-tiles", "/n_tiles", "Number of sampled tiles")
      .flag<std::string>("--out", "/out", "Curves CSV")
      .flag<std::string>("--plot", "/plot", "Optional PNG chart")
      .flag<std::string>("--dir", "/direction", "Encoder direction, X2Y or Y2X")
      .flag<std::uint64_t>("--seed", "/seed", "Tile sampling seed");

  Command seams(app, "seam-report", "Seam index and whole-vs-stitched MSE per eval slide");
  seams.flag<std::string>("--ckpt-ours", "/ckpt_ours", "Checkpoint trained with the embedding term")
      .flag<std::string>("--ckpt-base", "/ckpt_base", "Baseline checkpoint")
      .flag<std::string>("--manifest", "/manifest", "Dataset manifest.json")
      .flag<int>("--tile", "/tile", "Tile size")
      .flag<int>("--overlap", "/overlap", "Tile overlap")
      .flag<std::string>("--out", "/out", "Output CSV")
      .flag<std::string>("--dir", "/direction", "X2Y or Y2X");

  Command ablate(app, "ablate", "Full two-arm ablation");
  ablate.flag<std::string>("--out", "/out", "Output directory")
      .flag<std::vector<std::uint64_t>>("--seeds", "/ablate/seeds", "Training seeds")
      .flag<int>("--epochs", "/ablate/train/epochs", "Epochs per arm")
      .flag<int>("--base-channels", "/ablate/train/generator/base_channels", "Generator base channels")
      .flag<int>("--disc-channels", "/ablate/train/discriminator/base_channels", "Discriminator base channels")
      .flag<int>("--fov", "/ablate/fov", "Evaluation field-of-view size")
      .flag<int>("--n-tiles", "/ablate/sensitivity_tiles", "Sensitivity tiles");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  const std::vector<std::pair<Command*, int (*)(const json&)>> table = {
      {&synth, cmd_synth}, {&train_cmd, cmd_train},  {&infer, cmd_infer},  {&eval, cmd_eval},
      {&sens, cmd_sensitivity}, {&seams, cmd_seam_report}, {&ablate, cmd_ablate}};
  for (const auto& [cmd, fn] : table) {
    if (!cmd->parsed()) continue;
    try {
      return fn(cmd->effective());
    } catch (const UsageError& e) {
      std::cerr << "error: " << e.what() << '\n';
      return 2;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return 1;
    }
  }
  return 2;
}

}  // namespace seamstain
