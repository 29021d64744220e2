// SPDX-License-Identifier: Apache-2.0
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "mvcs/io.hpp"

namespace mvcs {
namespace {

namespace fs = std::filesystem;

const fs::path& base_dir() {
  static const fs::path p = [] {
    const fs::path d = fs::temp_directory_path() / "mvcs_test_cli";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return p;
}

struct RunResult {
  int code = -1;
  std::string out;
  std::string err;
};

RunResult run_cli(const std::string& args) {
  const fs::path out = base_dir() / "stdout.txt", err = base_dir() / "stderr.txt";
  const std::string cmd = std::string(MVCS_CLI_PATH) + " " + args + " >" + out.string() + " 2>" +
                          err.string();
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = read_file(out);
  r.err = read_file(err);
  return r;
}

std::string path(const std::string& rel) { return (base_dir() / rel).string(); }

// One default dataset shared by the tests below.
const std::string& scene_dir() {
  static const std::string dir = [] {
    const RunResult r = run_cli("gen-scene --out " + path("scene") + " --seed 5");
    EXPECT_EQ(r.code, 0) << r.err;
    return path("scene");
  }();
  return dir;
}

std::size_t count_files(const fs::path& dir) {
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(dir)) n += e.is_regular_file();
  return n;
}

std::vector<std::string> csv_lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) out.push_back(line);
  return out;
}

TEST(GenScene, DefaultWritesEveryView) {
  const fs::path d = scene_dir();
  EXPECT_EQ(count_files(d / "cameras"), 16u);
  EXPECT_EQ(count_files(d / "masks"), 16u);
  EXPECT_EQ(count_files(d / "features"), 16u);
  ASSERT_TRUE(fs::exists(d / "manifest.txt"));
  const std::string manifest = read_file(d / "manifest.txt");
  EXPECT_NE(manifest.find("file = masks/gt_15.pbm"), std::string::npos);
  EXPECT_NE(manifest.find("file = split.cfg"), std::string::npos);
  for (const auto& e : fs::recursive_directory_iterator(d))
    EXPECT_NE(e.path().extension(), ".tmp") << e.path();
}

TEST(GenScene, SameSeedIsByteIdentical) {
  const fs::path a = scene_dir();
  const fs::path b = path("scene_again");
  ASSERT_EQ(run_cli("gen-scene --out " + b.string() + " --seed 5").code, 0);
  std::size_t compared = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), a);
    ASSERT_TRUE(fs::exists(b / rel)) << rel;
    EXPECT_EQ(read_file(e.path()), read_file(b / rel)) << rel;
    ++compared;
  }
  EXPECT_GT(compared, 60u);
}

TEST(GenScene, TinyLabeledFractionFails) {
  const RunResult r = run_cli("gen-scene --out " + path("tiny") + " --eta 0.01");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("fewer than 2 labeled"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(path("tiny") + "/manifest.txt"));
}

TEST(GenScene, UnknownFlagIsConfigError) {
  EXPECT_EQ(run_cli("gen-scene --out " + path("x") + " --bogus").code, 2);
  EXPECT_EQ(run_cli("--help").code, 0);
}

TEST(Transfer, VerifyAgreesWithDenseSweep) {
  const std::string d = scene_dir();
  const RunResult r = run_cli("transfer --out " + path("transfer") + " --target " + d +
                              "/cameras/cam_00.cfg --sources " + d + "/cameras/cam_04.cfg " + d +
                              "/cameras/cam_11.cfg --maps " + d + "/probs/gt_04.mvpm " + d +
                              "/probs/gt_11.mvpm --verify");
  ASSERT_EQ(r.code, 0) << r.err;
  const Config report = load_config(path("transfer/verify.txt"));
  const double linf = report.find("")->number("linf");
  EXPECT_LE(linf, 0.05);
  const std::string pgm = read_file(path("transfer/transfer.pgm"));
  EXPECT_EQ(pgm.substr(0, 13), "P5\n64 64\n255\n");
  EXPECT_EQ(pgm.size(), 13u + 64 * 64);
  const ProbMap m = load_probmap(path("transfer/transfer.mvpm"));
  std::size_t matches = 0;
  for (std::size_t i = 0; i < m.size(); ++i)
    matches += static_cast<unsigned char>(pgm[13 + i]) == std::lround(255.0 * m[i]);
  EXPECT_EQ(matches, m.size());
}

TEST(Transfer, MissingCameraIsIoError) {
  const std::string d = scene_dir();
  const RunResult r = run_cli("transfer --out " + path("t_missing") + " --target " + d +
                              "/cameras/cam_99.cfg --sources " + d + "/cameras/cam_04.cfg --maps " +
                              d + "/probs/gt_04.mvpm");
  EXPECT_EQ(r.code, 4);
}

TEST(Transfer, DegeneratePairIsNamed) {
  const std::string d = scene_dir();
  const RunResult r = run_cli("transfer --out " + path("t_degenerate") + " --target " + d +
                              "/cameras/cam_03.cfg --sources " + d + "/cameras/cam_03.cfg --maps " +
                              d + "/probs/gt_03.mvpm");
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("cam_03.cfg, "), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(path("t_degenerate") + "/transfer.mvpm"));
}

TEST(Bounds, GapShrinksAcrossCounts) {
  const RunResult r = run_cli("bounds --out " + path("bounds"));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto lines = csv_lines(read_file(path("bounds/gap.csv")));
  ASSERT_EQ(lines.size(), 5u);
  double prev = 2.0;
  for (std::size_t k = 1; k < lines.size(); ++k) {
    int count = 0;
    double mean = 0, max = 0;
    std::size_t lower_bad = 0, upper_bad = 0;
    ASSERT_EQ(std::sscanf(lines[k].c_str(), "%d,%lf,%lf,%zu,%zu", &count, &mean, &max, &lower_bad,
                          &upper_bad),
              5);
    EXPECT_LT(mean, prev) << lines[k];
    EXPECT_EQ(lower_bad, 0u);
    EXPECT_EQ(upper_bad, 0u);
    prev = mean;
  }
}

TEST(Bounds, RejectsSingleLabeledView) {
  EXPECT_EQ(run_cli("bounds --out " + path("b1") + " --counts 1 4").code, 2);
}

const std::string& train_config() {
  static const std::string p = [] {
    const std::string file = path("train.cfg");
    write_file_atomic(file, "[train]\nregime = cross\nsteps = 40\nwarmup_steps = 10\n"
                            "eval_every = 10\nseed = 2\n");
    return file;
  }();
  return p;
}

TEST(Train, ResumeMatchesUninterruptedRun) {
  const std::string base = "train --data " + scene_dir() + " --config " + train_config();
  ASSERT_EQ(run_cli(base + " --out " + path("full")).code, 0);
  ASSERT_EQ(run_cli(base + " --out " + path("part") + " --stop-at 17").code, 0);
  const RunResult r =
      run_cli(base + " --out " + path("resumed") + " --resume " + path("part/checkpoint.txt"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_file(path("full/checkpoint.txt")), read_file(path("resumed/checkpoint.txt")));
  EXPECT_EQ(read_file(path("full/metrics.csv")), read_file(path("resumed/metrics.csv")));
  EXPECT_EQ(read_file(path("full/losses.csv")), read_file(path("resumed/losses.csv")));
  EXPECT_EQ(csv_lines(read_file(path("full/metrics.csv"))).size(), 5u);
}

TEST(Train, CorruptCheckpointFails) {
  write_file_atomic(path("corrupt.txt"), "mvcs-checkpoint 1\nregime cross\niteration 3\nmodel 5\n");
  const RunResult r = run_cli("train --data " + scene_dir() + " --config " + train_config() +
                              " --out " + path("corrupt_run") + " --resume " + path("corrupt.txt"));
  EXPECT_EQ(r.code, 4);
  EXPECT_FALSE(fs::exists(path("corrupt_run/checkpoint.txt")));
}

TEST(Eval, LabeledViewsWarn) {
  const std::string ckpt = path("eval_ckpt");
  ASSERT_EQ(run_cli("train --data " + scene_dir() + " --config " + train_config() + " --out " +
                    ckpt + " --steps 10")
                .code,
            0);
  const RunResult r = run_cli("eval --data " + scene_dir() + " --out " + path("eval") +
                              " --checkpoints " + ckpt + "/checkpoint.txt --views labeled");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("warning"), std::string::npos);
  const auto lines = csv_lines(read_file(path("eval/comparison.csv")));
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_EQ(lines[1].rfind("cross,", 0), 0u);
  const RunResult quiet = run_cli("eval --data " + scene_dir() + " --out " + path("eval2") +
                                  " --checkpoints " + ckpt + "/checkpoint.txt");
  EXPECT_EQ(quiet.code, 0);
  EXPECT_EQ(quiet.err.find("warning"), std::string::npos);
}

}  // namespace
}  // namespace mvcs
