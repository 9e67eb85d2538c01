#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "seamstain/cli.hpp"
#include "seamstain/config_json.hpp"
#include "seamstain/image_io.hpp"
#include "seamstain/pipeline.hpp"
#include "test_util.hpp"

namespace seamstain {
namespace {

using nlohmann::json;
using testing::TempDir;
using testing::textured_raster;

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "seamstain");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int count_lines(const std::string& s) { return static_cast<int>(std::count(s.begin(), s.end(), '\n')); }

std::vector<std::string> synth_args(const std::filesystem::path& out) {
  return {"synth", "--out", out.string(), "--seed", "4", "--n-train", "2", "--n-eval", "1", "--tile", "16",
          "--overlap", "8", "--width", "48", "--height", "48", "--density", "40"};
}

TEST(Cli, ExitCodes) {
  TempDir dir("cli");
  EXPECT_EQ(cli({}), 2);                                                     // no subcommand
  EXPECT_EQ(cli({"frobnicate"}), 2);                                         // unknown subcommand
  EXPECT_EQ(cli({"synth"}), 2);                                              // missing --out
  EXPECT_EQ(cli({"synth", "--out", (dir.path() / "x").string(), "--n-train", "1"}), 2);  // invalid config
  EXPECT_EQ(cli({"eval", "--virtual", "a"}), 2);                             // missing --real
  EXPECT_EQ(cli({"infer", "--ckpt", (dir.path() / "none.ckpt").string(), "--in", "a.png", "--out",
                 (dir.path() / "o.png").string(), "--dir", "sideways"}),
            2);
  // Well-formed request, missing file: a runtime failure.
  EXPECT_EQ(cli({"infer", "--ckpt", (dir.path() / "none.ckpt").string(), "--in", "a.png", "--out",
                 (dir.path() / "o.png").string()}),
            1);
  EXPECT_EQ(cli({"synth", "--config", (dir.path() / "absent.json").string()}), 2);
  EXPECT_EQ(cli({"--help"}), 0);
}

TEST(Cli, SynthIsReproducibleAndEchoesConfig) {
  TempDir dir("cli");
  ASSERT_EQ(cli(synth_args(dir.path() / "a")), 0);
  ASSERT_EQ(cli(synth_args(dir.path() / "b")), 0);
  EXPECT_EQ(read_manifest(dir.path() / "a" / "manifest.json"), read_manifest(dir.path() / "b" / "manifest.json"));
  const Manifest m = read_manifest(dir.path() / "a" / "manifest.json");
  EXPECT_EQ(read_png(m.train_paths(Domain::X)[3]),
            read_png(read_manifest(dir.path() / "b" / "manifest.json").train_paths(Domain::X)[3]));
  const json echo = read_json(dir.path() / "a" / "synth_config.json");
  EXPECT_EQ(echo.at("synth").at("tile"), 16);
  EXPECT_EQ(echo.at("synth").at("slide").at("nucleus_density"), 40.0);
  // The echo is itself a valid --config.
  ASSERT_EQ(cli({"synth", "--config", (dir.path() / "a" / "synth_config.json").string(), "--out",
                 (dir.path() / "c").string()}),
            0);
  EXPECT_EQ(read_manifest(dir.path() / "c" / "manifest.json"), m);
}

TEST(Cli, ConfigFileAndFlagOverride) {
  TempDir dir("cli");
  write_json(dir.path() / "cfg.json", json{{"out", (dir.path() / "d").string()},
                                           {"synth", {{"n_train_slides", 2}, {"n_eval_slides", 1}, {"tile", 16},
                                                      {"overlap", 0}, {"seed", 1},
                                                      {"slide", {{"width", 32}, {"height", 32}}}}}});
  ASSERT_EQ(cli({"synth", "--config", (dir.path() / "cfg.json").string(), "--overlap", "8"}), 0);
  EXPECT_EQ(read_manifest(dir.path() / "d" / "manifest.json").overlap, 8);
  // Unknown keys are configuration errors.
  write_json(dir.path() / "bad.json", json{{"out", "x"}, {"synth", {{"tiles", 3}}}});
  EXPECT_EQ(cli({"synth", "--config", (dir.path() / "bad.json").string()}), 2);
}

TEST(Cli, EvalOnIdenticalDirectories) {
  TempDir dir("cli");
  std::filesystem::create_directories(dir.path() / "v");
  std::filesystem::create_directories(dir.path() / "r");
  write_png(dir.path() / "v" / "s0.png", textured_raster(128, 128, 1, 3));
  write_png(dir.path() / "r" / "s0.png", textured_raster(128, 128, 1, 3));
  const auto csv = dir.path() / "out" / "eval.csv";
  std::filesystem::create_directories(csv.parent_path());
  ASSERT_EQ(cli({"eval", "--virtual", (dir.path() / "v").string(), "--real", (dir.path() / "r").string(), "--fov",
                 "64", "--out", csv.string()}),
            0);
  EXPECT_EQ(count_lines(slurp(csv)), 5);
  EXPECT_EQ(read_json(dir.path() / "out" / "eval_config.json").at("fov"), 64);
}

class CliPipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir("clipipe");
    ASSERT_EQ(cli(synth_args(dir_->path() / "data")), 0);
    // The two-layer discriminator is only reachable through a config file.
    write_json(dir_->path() / "train.json", json{{"train", testing::tiny_train(3, 2)}});
    for (const char* arm : {"ours", "base"}) {
      ASSERT_EQ(cli({"train", "--config", (dir_->path() / "train.json").string(), "--manifest",
                     (dir_->path() / "data" / "manifest.json").string(), "--out", (dir_->path() / arm).string(),
                     "--epochs", "1", "--w-embd", std::string(arm) == "ours" ? "10" : "0"}),
                0);
    }
  }
  static void TearDownTestSuite() { delete dir_; }
  static std::string path(const std::string& rel) { return (dir_->path() / rel).string(); }
  static TempDir* dir_;
};
TempDir* CliPipeline::dir_ = nullptr;

TEST_F(CliPipeline, TrainWritesLogCheckpointAndEcho) {
  EXPECT_TRUE(std::filesystem::exists(path("ours/final.ckpt")));
  EXPECT_EQ(count_lines(slurp(path("ours/train_log.csv"))), 1 + 25);
  const json echo = read_json(path("base/train_config.json"));
  EXPECT_EQ(echo.at("train").at("loss_weights").at("embd"), 0.0);
  EXPECT_EQ(echo.at("train").at("epochs"), 1);
}

TEST_F(CliPipeline, InferProducesSlideSizedImage) {
  const Manifest m = read_manifest(path("data/manifest.json"));
  const std::string in = m.resolve(m.eval_slides().front()->x_path).string();
  ASSERT_EQ(cli({"infer", "--ckpt", path("ours/final.ckpt"), "--in", in, "--out", path("infer/out.png"), "--tile",
                 "16", "--overlap", "8"}),
            0);
  EXPECT_TRUE(read_png(path("infer/out.png")).same_dims(read_png(in)));
  EXPECT_EQ(read_json(path("infer/infer_config.json")).at("direction"), "X2Y");
}

TEST_F(CliPipeline, SeamReportAndSensitivity) {
  ASSERT_EQ(cli({"seam-report", "--ckpt-ours", path("ours/final.ckpt"), "--ckpt-base", path("base/final.ckpt"),
                 "--manifest", path("data/manifest.json"), "--out", path("seams.csv")}),
            0);
  EXPECT_EQ(count_lines(slurp(path("seams.csv"))), 1 + 2);
  ASSERT_EQ(cli({"sensitivity", "--ckpt-ours", path("ours/final.ckpt"), "--ckpt-base", path("base/final.ckpt"),
                 "--manifest", path("data/manifest.json"), "--n-tiles", "4", "--out", path("sens.csv"), "--plot",
                 path("sens.png")}),
            0);
  EXPECT_EQ(count_lines(slurp(path("sens.csv"))), 1 + 30);
  EXPECT_TRUE(std::filesystem::exists(path("sens.png")));
}

TEST(Cli, AblateTinyRunWritesSummary) {
  TempDir dir("ablate");
  AblationConfig cfg;
  cfg.data = testing::tiny_dataset();
  cfg.data.n_train_slides = 2;
  cfg.train = testing::tiny_train(0, 1);
  cfg.seeds = {0};
  cfg.fov = 48;
  cfg.pyramid.n_scales = 2;
  cfg.sensitivity_tiles = 3;
  cfg.plot = false;
  write_json(dir.path() / "ablate.json", json{{"ablate", cfg}});
  ASSERT_EQ(cli({"ablate", "--config", (dir.path() / "ablate.json").string(), "--out", (dir.path() / "run").string()}),
            0);
  const std::string table = slurp(dir.path() / "run" / "table1.csv");
  EXPECT_EQ(count_lines(table), 3);  // header + ours + baseline
  EXPECT_NE(table.find(",ours,"), std::string::npos);
  EXPECT_NE(table.find(",baseline,"), std::string::npos);
  const std::string md = slurp(dir.path() / "run" / "summary.md");
  EXPECT_NE(md.find("| ours |"), std::string::npos);
  EXPECT_NE(md.find("| baseline |"), std::string::npos);
  EXPECT_EQ(count_lines(slurp(dir.path() / "run" / "seams.csv")), 1 + 2);
}

}  // namespace
}  // namespace seamstain
