#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "wisynth/config.hpp"
#include "wisynth/csi_io.hpp"
#include "wisynth/synthetic.hpp"

using namespace wisynth;
namespace fs = std::filesystem;

namespace {

const char* kCli = WISYNTH_CLI_PATH;

struct CliResult {
  int code = -1;
  std::string output;
};

fs::path work_dir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "wisynth_cli_tests";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

CliResult run_cli(const std::string& args) {
  static int counter = 0;
  const fs::path log = work_dir() / ("out_" + std::to_string(counter++) + ".txt");
  const std::string cmd =
      std::string(kCli) + " " + args + " >" + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  r.output.assign(std::istreambuf_iterator<char>(in),
                  std::istreambuf_iterator<char>());
  return r;
}

RunConfig tiny_config() {
  RunConfig cfg;
  cfg.model.t = 8;
  cfg.model.height = 16;
  cfg.model.width = 16;
  cfg.model.c1 = 2;
  cfg.model.c2 = 3;
  cfg.model.c3 = 4;
  cfg.model.h_size = 6;
  cfg.model.n_pkt = 8;
  cfg.model.n_sub = 5;
  cfg.scene.n_sub = 5;
  cfg.optim.epochs = 2;
  cfg.optim.batch = 2;
  cfg.optim.train_fraction = 1.0;
  cfg.optim.seed = 3;
  return cfg;
}

std::string write_tiny_config(const std::string& name) {
  const fs::path path = work_dir() / name;
  const std::string text = serialize_config(tiny_config());
  write_file(path.string(), std::vector<std::uint8_t>(text.begin(), text.end()));
  return path.string();
}

std::vector<std::uint8_t> slurp(const fs::path& p) { return read_file(p.string()); }

// Compares the regular files of two directory trees byte for byte.
void expect_identical_trees(const fs::path& a, const fs::path& b) {
  std::vector<fs::path> rel_a;
  for (const auto& e : fs::recursive_directory_iterator(a))
    if (e.is_regular_file()) rel_a.push_back(fs::relative(e.path(), a));
  std::sort(rel_a.begin(), rel_a.end());
  ASSERT_FALSE(rel_a.empty());
  for (const fs::path& rel : rel_a) {
    ASSERT_TRUE(fs::exists(b / rel)) << rel;
    EXPECT_EQ(slurp(a / rel), slurp(b / rel)) << rel;
  }
}

}  // namespace

TEST(Cli, NoSubcommandIsUsageError) {
  EXPECT_EQ(run_cli("").code, 1);
  EXPECT_EQ(run_cli("--bogus").code, 1);
  EXPECT_EQ(run_cli("synthesize --model x.w8ts --out y").code, 1);  // missing --csi
}

TEST(Cli, HelpSucceeds) {
  const CliResult r = run_cli("--help");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.output.find("generate"), std::string::npos);
}

TEST(Cli, GenerateCreatesSamplesDeterministically) {
  const std::string cfg = write_tiny_config("gen.cfg");
  const fs::path a = work_dir() / "data_a";
  const fs::path b = work_dir() / "data_b";
  const std::string args =
      " --samples 2 --seed 11 --config " + cfg + " --out ";
  CliResult r = run_cli("generate" + args + a.string());
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.output.find("2 samples written"), std::string::npos);
  EXPECT_TRUE(fs::exists(a / "sample_0000" / "clip_000.pgm"));
  EXPECT_TRUE(fs::exists(a / "sample_0000" / "csi.csib"));
  EXPECT_TRUE(fs::exists(a / "sample_0001" / "clip_007.pgm"));

  EXPECT_EQ(run_cli("generate" + args + b.string()).code, 0);
  expect_identical_trees(a, b);
}

TEST(Cli, GenerateRejectsBadKind) {
  const fs::path out = work_dir() / "data_badkind";
  EXPECT_EQ(
      run_cli("generate --samples 1 --kind mesh --out " + out.string()).code,
      2);
}

TEST(Cli, SanitizeWritesCsv) {
  // Fixture: constant amplitude with one spiked packet.
  SceneConfig scene;
  scene.noise_std = 0.0;
  scene.seed = 12;
  const auto pairs = generate_dataset(1, 4, 64, scene,
                                      VideoClip::Kind::kSilhouette, 16, 16);
  const fs::path in = work_dir() / "fixture.csib";
  write_file(in.string(), write_csib(pairs[0].csi));
  const fs::path out = work_dir() / "amps.csv";
  const CliResult r = run_cli("sanitize --window 5 --in " + in.string() +
                              " --out " + out.string());
  EXPECT_EQ(r.code, 0);
  ASSERT_TRUE(fs::exists(out));
  std::ifstream csv(out);
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header.rfind("k0", 0), 0u);
  std::size_t rows = 0;
  for (std::string line; std::getline(csv, line);)
    if (!line.empty()) ++rows;
  EXPECT_EQ(rows, 64u);
}

TEST(Cli, SanitizeMissingInputIsIoError) {
  const fs::path out = work_dir() / "nope.csv";
  EXPECT_EQ(run_cli("sanitize --in " + (work_dir() / "missing.csib").string() +
                    " --out " + out.string())
                .code,
            3);
}

TEST(Cli, TrainSynthesizeEvaluatePipeline) {
  const std::string cfg = write_tiny_config("train.cfg");
  const fs::path data = work_dir() / "pipe_data";
  const fs::path model_a = work_dir() / "pipe_model_a";
  const fs::path model_b = work_dir() / "pipe_model_b";
  ASSERT_EQ(run_cli("generate --samples 2 --seed 21 --config " + cfg +
                    " --out " + data.string())
                .code,
            0);

  CliResult r = run_cli("train --data " + data.string() + " --out " +
                        model_a.string() + " --config " + cfg);
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_TRUE(fs::exists(model_a / "model.w8ts"));
  EXPECT_TRUE(fs::exists(model_a / "losses.csv"));
  EXPECT_TRUE(fs::exists(model_a / "run_config.txt"));

  // Same seed, fresh run: identical artifacts.
  ASSERT_EQ(run_cli("train --data " + data.string() + " --out " +
                    model_b.string() + " --config " + cfg)
                .code,
            0);
  EXPECT_EQ(slurp(model_a / "losses.csv"), slurp(model_b / "losses.csv"));
  EXPECT_EQ(slurp(model_a / "model.w8ts"), slurp(model_b / "model.w8ts"));

  // Resume: a second run on the same output directory restores the
  // checkpoint and reports the resume epoch.
  r = run_cli("train --data " + data.string() + " --out " + model_a.string() +
              " --config " + cfg);
  EXPECT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("resuming from epoch 2"), std::string::npos)
      << r.output;

  // Synthesize from CSI alone; frame count must equal the configured t.
  const fs::path frames = work_dir() / "pipe_frames";
  r = run_cli("synthesize --model " + (model_b / "model.w8ts").string() +
              " --csi " + (data / "sample_0000" / "csi.csib").string() +
              " --out " + frames.string());
  ASSERT_EQ(r.code, 0) << r.output;
  std::size_t n_frames = 0;
  for (const auto& e : fs::directory_iterator(frames))
    if (e.path().extension() == ".pgm") ++n_frames;
  EXPECT_EQ(n_frames, 8u);

  // Evaluate a directory against itself: exact-identity metrics.
  r = run_cli("evaluate --pred " + frames.string() + " --truth " +
              frames.string());
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("\"mse\": 0.000000"), std::string::npos);
  EXPECT_NE(r.output.find("\"ssim\": 1.000000"), std::string::npos);
  EXPECT_NE(r.output.find("\"50.000000\": 100.000000"), std::string::npos);

  // Evaluate against the ground-truth clip directory as a smoke test.
  r = run_cli("evaluate --thresholds 5,50 --pred " + frames.string() +
              " --truth " + (data / "sample_0000").string());
  EXPECT_EQ(r.code, 0) << r.output;
}

TEST(Cli, TrainMissingDataDirIsIoError) {
  const std::string cfg = write_tiny_config("missing.cfg");
  EXPECT_EQ(run_cli("train --data " + (work_dir() / "no_such_dir").string() +
                    " --out " + (work_dir() / "m_out").string() + " --config " +
                    cfg)
                .code,
            3);
}

TEST(Cli, TrainBadConfigIsParseError) {
  const fs::path cfg = work_dir() / "bad.cfg";
  const std::string text = "optim.lr=not_a_number\n";
  write_file(cfg.string(), std::vector<std::uint8_t>(text.begin(), text.end()));
  EXPECT_EQ(run_cli("train --data " + (work_dir() / "x").string() + " --out " +
                    (work_dir() / "y").string() + " --config " + cfg.string())
                .code,
            2);
}

TEST(Cli, SynthesizeMismatchedCsiIsShapeError) {
  const std::string cfg = write_tiny_config("mismatch.cfg");
  const fs::path data = work_dir() / "mm_data";
  const fs::path model = work_dir() / "mm_model";
  ASSERT_EQ(run_cli("generate --samples 1 --seed 5 --config " + cfg +
                    " --out " + data.string())
                .code,
            0);
  ASSERT_EQ(run_cli("train --data " + data.string() + " --out " +
                    model.string() + " --config " + cfg)
                .code,
            0);
  // CSI with the wrong packet count for the checkpoint.
  SceneConfig scene;
  scene.n_sub = 5;
  const auto other = generate_dataset(1, 4, 16, scene,
                                      VideoClip::Kind::kSilhouette, 16, 16);
  const fs::path bad = work_dir() / "wrong_pkt.csib";
  write_file(bad.string(), write_csib(other[0].csi));
  EXPECT_EQ(run_cli("synthesize --model " + (model / "model.w8ts").string() +
                    " --csi " + bad.string() + " --out " +
                    (work_dir() / "mm_frames").string())
                .code,
            4);
}

TEST(Cli, EvaluateMismatchedFrameCountsIsShapeError) {
  const fs::path a = work_dir() / "eval_a";
  const fs::path b = work_dir() / "eval_b";
  fs::create_directories(a);
  fs::create_directories(b);
  const Pose pose = pose_trajectory(61, 1)[0];
  const VideoClip frame = render_silhouette(pose, 16, 16);
  write_file((a / "clip_000.pgm").string(), encode_pnm(frame, 0));
  write_file((a / "clip_001.pgm").string(), encode_pnm(frame, 0));
  write_file((b / "clip_000.pgm").string(), encode_pnm(frame, 0));
  EXPECT_EQ(
      run_cli("evaluate --pred " + a.string() + " --truth " + b.string()).code,
      4);
}

TEST(Cli, EvaluateBadThresholdIsParseError) {
  const fs::path a = work_dir() / "eval_c";
  fs::create_directories(a);
  const Pose pose = pose_trajectory(62, 1)[0];
  write_file((a / "clip_000.pgm").string(),
             encode_pnm(render_silhouette(pose, 16, 16), 0));
  EXPECT_EQ(run_cli("evaluate --thresholds 5,zebra --pred " + a.string() +
                    " --truth " + a.string())
                .code,
            2);
}

TEST(Cli, GradcheckPassesAndDetectsCorruption) {
  CliResult r = run_cli("gradcheck --seeds 2 --seed 7");
  EXPECT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("PASS"), std::string::npos);
  EXPECT_EQ(r.output.find("FAIL"), std::string::npos);

  r = run_cli("gradcheck --seeds 1 --corrupt 0.5");
  EXPECT_EQ(r.code, 5) << r.output;
  EXPECT_NE(r.output.find("FAIL"), std::string::npos);
}
