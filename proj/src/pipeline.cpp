#include "seamstain/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <regex>
#include <sstream>

#include "seamstain/checkpoint.hpp"
#include "seamstain/config_json.hpp"
#include "seamstain/image_io.hpp"
#include "seamstain/plot.hpp"

namespace seamstain {

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  if (!path.parent_path().empty()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(path.string() + ": " + e.what());
  }
}

void AblationConfig::validate() const {
  data.validate();
  train.validate();
  if (seeds.empty()) throw InvalidArgument("ablation needs at least one seed");
  if (!(ours_w_embd > 0.0)) throw InvalidArgument("ours_w_embd must be positive");
  if (data.n_eval_slides < 1) throw InvalidArgument("ablation needs evaluation slides");
  if (tile() % 4 != 0) throw InvalidArgument("inference tile must be a multiple of 4");
  if (overlap() >= tile()) throw InvalidArgument("inference overlap must be smaller than the tile");
  if (fov > data.slide.width || fov > data.slide.height) throw InvalidArgument("fov larger than the slides");
  pyramid.check_image(fov, fov);
  if (sensitivity_tiles < 1) throw InvalidArgument("sensitivity_tiles must be >= 1");
  for (const auto& p : perturbations) p.validate();
}

void to_json(nlohmann::json& j, const AblationConfig& c) {
  nlohmann::json perts = nlohmann::json::array();
  for (const auto& p : c.perturbations) perts.push_back({{"kind", to_string(p.kind)}, {"grid", p.grid}});
  j = {{"data", c.data},
       {"train", c.train},
       {"seeds", c.seeds},
       {"ours_w_embd", c.ours_w_embd},
       {"infer_tile", c.infer_tile},
       {"infer_overlap", c.infer_overlap},
       {"blend", to_string(c.blend)},
       {"fov", c.fov},
       {"pyramid", c.pyramid},
       {"sensitivity_tiles", c.sensitivity_tiles},
       {"perturbations", perts},
       {"direction", to_string(c.direction)},
       {"plot", c.plot}};
}

void from_json(const nlohmann::json& j, AblationConfig& c) {
  using json_detail::read;
  json_detail::require_known_keys(j,
                                  {"data", "train", "seeds", "ours_w_embd", "infer_tile", "infer_overlap", "blend",
                                   "fov", "pyramid", "sensitivity_tiles", "perturbations", "direction", "plot"},
                                  "ablate");
  if (j.contains("data")) from_json(j.at("data"), c.data);
  if (j.contains("train")) from_json(j.at("train"), c.train);
  read(j, "seeds", c.seeds);
  read(j, "ours_w_embd", c.ours_w_embd);
  read(j, "infer_tile", c.infer_tile);
  read(j, "infer_overlap", c.infer_overlap);
  std::string s;
  if (j.contains("blend")) {
    read(j, "blend", s);
    c.blend = parse_blend(s);
  }
  read(j, "fov", c.fov);
  if (j.contains("pyramid")) from_json(j.at("pyramid"), c.pyramid);
  read(j, "sensitivity_tiles", c.sensitivity_tiles);
  if (j.contains("perturbations")) {
    c.perturbations.clear();
    for (const auto& p : j.at("perturbations")) {
      json_detail::require_known_keys(p, {"kind", "grid"}, "perturbation");
      PerturbationSpec spec;
      spec.kind = parse_perturbation_kind(p.at("kind").get<std::string>());
      read(p, "grid", spec.grid);
      c.perturbations.push_back(std::move(spec));
    }
  }
  if (j.contains("direction")) {
    read(j, "direction", s);
    c.direction = parse_direction(s);
  }
  read(j, "plot", c.plot);
}

namespace {

// Newest epoch_<k>.ckpt in dir, if any.
std::filesystem::path latest_epoch_checkpoint(const std::filesystem::path& dir) {
  static const std::regex pattern(R"(epoch_(\d+)\.ckpt)");
  std::filesystem::path best;
  int best_epoch = -1;
  if (!std::filesystem::is_directory(dir)) return best;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = e.path().filename().string();
    if (std::regex_match(name, m, pattern) && std::stoi(m[1]) > best_epoch) {
      best_epoch = std::stoi(m[1]);
      best = e.path();
    }
  }
  return best;
}

}  // namespace

std::filesystem::path train_arm(const Manifest& manifest, const TrainConfig& cfg, const std::filesystem::path& dir) {
  const auto echo = dir / "train_config.json";
  const nlohmann::json wanted = cfg;
  bool same_config = false;
  if (std::filesystem::exists(echo)) {
    try {
      same_config = read_json(echo) == wanted;
    } catch (const std::exception&) {
      same_config = false;
    }
  }
  if (same_config && std::filesystem::exists(dir / "final.ckpt")) return dir / "final.ckpt";
  std::filesystem::path resume;
  if (same_config) {
    resume = latest_epoch_checkpoint(dir);
  } else if (std::filesystem::exists(dir)) {
    std::filesystem::remove_all(dir);
  }
  write_json(echo, wanted);
  return train(manifest, cfg, dir, resume).checkpoint;
}

namespace {

Manifest ensure_dataset(const DatasetConfig& cfg, const std::filesystem::path& dir) {
  const auto echo = dir / "synth_config.json";
  const nlohmann::json wanted = cfg;
  if (std::filesystem::exists(echo) && std::filesystem::exists(dir / "manifest.json")) {
    try {
      if (read_json(echo) == wanted) return read_manifest(dir / "manifest.json");
    } catch (const std::exception&) {
    }
  }
  if (std::filesystem::exists(dir)) std::filesystem::remove_all(dir);
  build_dataset(cfg, dir);
  write_json(echo, wanted);
  return read_manifest(dir / "manifest.json");
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(precision);
  os << v;
  return os.str();
}

double median_seam(const std::vector<ArtifactRow>& rows, const std::string& model) {
  std::vector<double> v;
  for (const auto& r : rows) {
    if (r.model == model) v.push_back(r.seam_index);
  }
  return median_of(v);
}

bool ordered(const std::vector<CurvePoint>& pts) {
  std::map<std::pair<int, double>, double> base;
  for (const auto& p : pts) {
    if (p.model == "baseline") base[{static_cast<int>(p.kind), p.magnitude}] = p.mean_mse;
  }
  for (const auto& p : pts) {
    if (p.model != "ours" || p.magnitude == identity_magnitude(p.kind)) continue;
    if (p.mean_mse > base.at({static_cast<int>(p.kind), p.magnitude})) return false;
  }
  return true;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

}  // namespace

AblationResult run_ablation(const AblationConfig& cfg, const std::filesystem::path& out_dir) {
  cfg.validate();
  std::filesystem::create_directories(out_dir);
  write_json(out_dir / "ablate_config.json", cfg);
  const Manifest manifest = ensure_dataset(cfg.data, out_dir / "data");

  std::vector<NamedSlide> sources;
  std::vector<Raster> targets;
  for (const SlideRecord* s : manifest.eval_slides()) {
    const bool fwd = cfg.direction == Direction::x_to_y;
    sources.push_back({s->id, read_png(manifest.resolve(fwd ? s->x_path : s->y_path))});
    targets.push_back(read_png(manifest.resolve(fwd ? s->y_path : s->x_path)));
  }

  AblationResult result;
  for (std::uint64_t seed : cfg.seeds) {
    SeedOutcome o;
    o.seed = seed;
    const auto seed_dir = out_dir / ("seed_" + std::to_string(seed));
    TrainConfig tc = cfg.train;
    tc.seed = seed;
    tc.weights.embd = cfg.ours_w_embd;
    std::cout << "[ablate] seed " << seed << ": training ours" << std::endl;
    o.ckpt_ours = train_arm(manifest, tc, seed_dir / "ours");
    tc.weights.embd = 0.0;
    std::cout << "[ablate] seed " << seed << ": training baseline" << std::endl;
    o.ckpt_baseline = train_arm(manifest, tc, seed_dir / "baseline");

    const ModelBundle ours = load_checkpoint(o.ckpt_ours);
    const ModelBundle base = load_checkpoint(o.ckpt_baseline);
    for (const auto& [name, bundle, report] :
         {std::tuple{"ours", &ours, &o.eval_ours}, std::tuple{"baseline", &base, &o.eval_baseline}}) {
      std::vector<std::pair<std::string, std::pair<Raster, Raster>>> pairs;
      for (std::size_t i = 0; i < sources.size(); ++i) {
        const Raster virt =
            quantize8(translate_slide(*bundle, cfg.direction, sources[i].image, cfg.tile(), cfg.overlap(), cfg.blend));
        write_png(seed_dir / name / "virtual" / (sources[i].id + ".png"), virt);
        pairs.push_back({sources[i].id, {virt, targets[i]}});
      }
      *report = evaluate_images(pairs, cfg.fov, cfg.pyramid);
    }
    o.seams = artifact_report(ours, base, sources, cfg.tile(), cfg.overlap(), cfg.direction);
    o.seam_ours = median_seam(o.seams, "ours");
    o.seam_baseline = median_seam(o.seams, "baseline");
    const auto tiles =
        sample_eval_tiles(manifest, cfg.direction, cfg.sensitivity_tiles, cfg.data.tile, cfg.data.overlap, seed);
    o.sensitivity = sweep(ours, base, tiles, cfg.perturbations, cfg.direction);
    o.sensitivity_ordered = ordered(o.sensitivity);
    std::cout << "[ablate] seed " << seed << ": cwssim ours " << format_summary(o.eval_ours.overall) << ", baseline "
              << format_summary(o.eval_baseline.overall) << "; seam ours " << fmt(o.seam_ours) << ", baseline "
              << fmt(o.seam_baseline) << std::endl;
    result.seeds.push_back(std::move(o));
  }

  std::vector<double> so, sb, co, cb;
  std::vector<double> all_ours, all_base;
  for (const auto& o : result.seeds) {
    so.push_back(o.seam_ours);
    sb.push_back(o.seam_baseline);
    co.push_back(o.eval_ours.overall.median);
    cb.push_back(o.eval_baseline.overall.median);
    for (const auto& t : o.eval_ours.per_tile) all_ours.push_back(t.cwssim);
    for (const auto& t : o.eval_baseline.per_tile) all_base.push_back(t.cwssim);
    result.sensitivity_seeds_ordered += o.sensitivity_ordered ? 1 : 0;
  }
  result.seam_ours = median_of(so);
  result.seam_baseline = median_of(sb);
  result.cwssim_ours = median_of(co);
  result.cwssim_baseline = median_of(cb);

  // table1.csv: per-seed CWSSIM aggregates.
  std::ostringstream table;
  table << "seed,model,mean,median,std,n_fov\n";
  for (const auto& o : result.seeds) {
    for (const auto& [name, rep] : {std::pair{"ours", &o.eval_ours}, std::pair{"baseline", &o.eval_baseline}}) {
      table << o.seed << ',' << name << ',' << fmt(rep->overall.mean, 6) << ',' << fmt(rep->overall.median, 6) << ','
            << fmt(rep->overall.std, 6) << ',' << rep->overall.count << '\n';
    }
  }
  write_text(out_dir / "table1.csv", table.str());

  std::ostringstream seams;
  seams << "seed,slide_id,model,seam_index,whole_vs_stitched_mse\n";
  for (const auto& o : result.seeds) {
    for (const auto& r : o.seams) {
      seams << o.seed << ',' << r.slide_id << ',' << r.model << ',' << fmt(r.seam_index, 6) << ','
            << fmt(r.whole_vs_stitched_mse, 8) << '\n';
    }
  }
  write_text(out_dir / "seams.csv", seams.str());

  std::ostringstream sens;
  sens << "seed,model,kind,magnitude,mean_mse\n";
  std::map<std::tuple<std::string, int, double>, std::vector<double>> curves;
  for (const auto& o : result.seeds) {
    for (const auto& p : o.sensitivity) {
      sens << o.seed << ',' << p.model << ',' << to_string(p.kind) << ',' << p.magnitude << ',' << fmt(p.mean_mse, 8)
           << '\n';
      curves[{p.model, static_cast<int>(p.kind), p.magnitude}].push_back(p.mean_mse);
    }
  }
  write_text(out_dir / "sensitivity.csv", sens.str());

  auto seed_mean = [&](const std::string& model, PerturbationKind k, double m) {
    const auto& v = curves.at({model, static_cast<int>(k), m});
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };

  if (cfg.plot) {
    std::vector<Panel> panels;
    for (const auto& spec : cfg.perturbations) {
      Panel p;
      Series ours{spec.grid, {}, 0.1f, 0.3f, 0.85f};
      Series base{spec.grid, {}, 0.85f, 0.2f, 0.15f};
      for (double m : spec.grid) {
        ours.y.push_back(seed_mean("ours", spec.kind, m));
        base.y.push_back(seed_mean("baseline", spec.kind, m));
      }
      p.series = {ours, base};
      panels.push_back(std::move(p));
    }
    write_line_chart(out_dir / "sensitivity.png", panels);
  }

  std::ostringstream md;
  md << "# Ablation summary\n\n";
  md << "Arms: ours (w_embd = " << cfg.ours_w_embd << ") and baseline (w_embd = 0), " << cfg.train.epochs
     << " epochs, seeds";
  for (auto s : cfg.seeds) md << ' ' << s;
  md << ". Inference tile " << cfg.tile() << ", overlap " << cfg.overlap() << ", blend " << to_string(cfg.blend)
     << ", direction " << to_string(cfg.direction) << ".\n\n";

  std::vector<double> mse_ours, mse_base;
  for (const auto& o : result.seeds) {
    for (const auto& r : o.seams) (r.model == "ours" ? mse_ours : mse_base).push_back(r.whole_vs_stitched_mse);
  }
  md << "## CWSSIM, virtual vs real (FoV " << cfg.fov << ", all seeds pooled)\n\n";
  md << "| model | mean (median) ± std | median over seeds |\n|---|---|---|\n";
  md << "| ours | " << format_summary(summarize(all_ours)) << " | " << fmt(result.cwssim_ours) << " |\n";
  md << "| baseline | " << format_summary(summarize(all_base)) << " | " << fmt(result.cwssim_baseline) << " |\n\n";
  md << "## Tiling artifact\n\n";
  md << "| model | seam_index (median over seeds) | whole_vs_stitched_mse (median) |\n|---|---|---|\n";
  md << "| ours | " << fmt(result.seam_ours) << " | " << fmt(median_of(mse_ours), 6) << " |\n";
  md << "| baseline | " << fmt(result.seam_baseline) << " | " << fmt(median_of(mse_base), 6) << " |\n\n";
  md << "## Embedding sensitivity (mean MSE, averaged over seeds)\n\n| model |";
  for (const auto& spec : cfg.perturbations) {
    for (double m : spec.grid) md << ' ' << to_string(spec.kind) << ' ' << m << " |";
  }
  md << "\n|---|";
  for (const auto& spec : cfg.perturbations) {
    for (std::size_t i = 0; i < spec.grid.size(); ++i) md << "---|";
  }
  md << '\n';
  for (const char* model : {"ours", "baseline"}) {
    md << "| " << model << " |";
    for (const auto& spec : cfg.perturbations) {
      for (double m : spec.grid) md << ' ' << fmt(seed_mean(model, spec.kind, m), 6) << " |";
    }
    md << '\n';
  }
  md << "\n## Direction of effect\n\n";
  md << "- seam_index ours < baseline: " << (result.seam_ours < result.seam_baseline ? "yes" : "no") << '\n';
  md << "- median CWSSIM ours >= baseline: " << (result.cwssim_ours >= result.cwssim_baseline ? "yes" : "no") << '\n';
  md << "- sensitivity ours <= baseline at every perturbed magnitude: " << result.sensitivity_seeds_ordered << " of "
     << result.seeds.size() << " seeds\n";
  result.summary = out_dir / "summary.md";
  write_text(result.summary, md.str());
  return result;
}

}  // namespace seamstain
