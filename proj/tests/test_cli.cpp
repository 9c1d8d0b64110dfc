#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <sys/wait.h>

#include <gtest/gtest.h>

#include "mkmc/cli.hpp"
#include "mkmc/io.hpp"
#include "test_support.hpp"

namespace mkmc {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("mkmc_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int mkmc(std::vector<std::string> args) {
  args.insert(args.begin(), "mkmc");
  return cli::run(args);
}

// Runs the installed binary through the shell and returns its exit status.
int mkmc_process(const std::string& args) {
  const std::string cmd = std::string(MKMC_BINARY) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<std::string> write_kernels(const fs::path& dir, const std::vector<SymmetricMatrix>& ks,
                                       io::MatrixFormat format, const std::string& stem = "k") {
  std::vector<std::string> paths;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    const fs::path p = dir / (stem + std::to_string(i) + (format == io::MatrixFormat::Csv ? ".csv" : ".bin"));
    io::write_matrix(p, ks[i].matrix(), format);
    paths.push_back(p.string());
  }
  return paths;
}

std::vector<std::string> with_flag(const std::string& flag, const std::vector<std::string>& values) {
  std::vector<std::string> out{flag};
  out.insert(out.end(), values.begin(), values.end());
  return out;
}

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

std::vector<SymmetricMatrix> synthetic(Index ell, std::size_t views, std::uint64_t seed) {
  SyntheticSpec spec;
  spec.ell = ell;
  spec.num_views = views;
  spec.per_view_jitter = 0.05;
  spec.seed = seed;
  return generate_synthetic(spec);
}

// ---------------------------------------------------------------- mask

TEST(CliMask, ZeroFractionReproducesInputs) {
  const fs::path dir = scratch_dir("mask0");
  const auto truth = synthetic(10, 3, 1);
  const auto inputs = write_kernels(dir, truth, io::MatrixFormat::Csv);
  ASSERT_EQ(mkmc(concat(concat({"mask"}, with_flag("--inputs", inputs)),
                        {"--fraction", "0", "--out-dir", (dir / "out").string()})),
            0);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(io::read_kernel(dir / "out" / ("masked_" + std::to_string(k) + ".csv")), truth[k]);
  }
  const VisibilityPattern p = io::read_mask(dir / "out" / "mask.json");
  EXPECT_FALSE(p.any_hidden());
}

TEST(CliMask, SameSeedGivesIdenticalBytes) {
  const fs::path dir = scratch_dir("mask_seed");
  const auto inputs = write_kernels(dir, synthetic(12, 2, 2), io::MatrixFormat::Binary);
  for (const char* out : {"a", "b"}) {
    ASSERT_EQ(mkmc(concat(concat({"mask"}, with_flag("--inputs", inputs)),
                          {"--fraction", "0.3", "--seed", "7", "--out-dir", (dir / out).string()})),
              0);
  }
  for (const char* name : {"mask.json", "masked_0.bin", "masked_1.bin"}) {
    EXPECT_EQ(io::read_bytes(dir / "a" / name), io::read_bytes(dir / "b" / name)) << name;
  }
  const VisibilityPattern p = io::read_mask(dir / "a" / "mask.json");
  EXPECT_EQ(p, random_mask(12, 2, 0.3, 7));
}

TEST(CliMask, MeanFillAndSharedFlag) {
  const fs::path dir = scratch_dir("mask_mean");
  const auto truth = synthetic(10, 2, 3);
  const auto inputs = write_kernels(dir, truth, io::MatrixFormat::Csv);
  ASSERT_EQ(mkmc(concat(concat({"mask"}, with_flag("--inputs", inputs)),
                        {"--fraction", "0.2", "--fill", "mean", "--shared", "--out-dir", dir.string()})),
            0);
  const VisibilityPattern p = io::read_mask(dir / "mask.json");
  EXPECT_EQ(p.hidden(0), p.hidden(1));
  EXPECT_EQ(io::read_kernel(dir / "masked_1.csv"), apply_mask(truth[1], p.hidden(1), Fill::Mean));
}

TEST(CliMask, NonSquareInputIsDimensionError) {
  const fs::path dir = scratch_dir("mask_rect");
  io::write_matrix(dir / "r.csv", Matrix::Ones(2, 3), io::MatrixFormat::Csv);
  EXPECT_EQ(mkmc({"mask", "--inputs", (dir / "r.csv").string(), "--fraction", "0.2", "--out-dir", dir.string()}),
            3);
}

// ---------------------------------------------------------------- complete

TEST(CliComplete, NothingHiddenReturnsInputs) {
  const fs::path dir = scratch_dir("complete_none");
  const auto truth = synthetic(8, 2, 4);
  const auto inputs = write_kernels(dir, truth, io::MatrixFormat::Binary);
  io::write_mask(dir / "mask.json", VisibilityPattern(8, {{}, {}}));
  for (const char* method : {"fc", "pca", "fa"}) {
    const fs::path out = dir / method;
    ASSERT_EQ(mkmc(concat(concat({"complete"}, with_flag("--inputs", inputs)),
                          {"--mask", (dir / "mask.json").string(), "--output-dir", out.string(), "--method",
                           method, "--rank", "2"})),
              0);
    for (std::size_t k = 0; k < 2; ++k) {
      EXPECT_EQ(io::read_kernel(out / ("completed_" + std::to_string(k) + ".bin")), truth[k]) << method;
    }
    const json trace = io::read_json(out / "trace.json");
    EXPECT_TRUE(trace["converged"].get<bool>());
    EXPECT_LE(trace["iterations"].get<int>(), 2);
  }
}

TEST(CliComplete, PcaWithCriterionMatchesLibrary) {
  const fs::path dir = scratch_dir("complete_pca");
  const auto truth = synthetic(20, 3, 5);
  const VisibilityPattern pattern = random_mask(20, 3, 0.2, 5);
  const auto masked = mask_views(truth, pattern, Fill::Zero);
  const auto inputs = write_kernels(dir, masked, io::MatrixFormat::Csv);
  io::write_mask(dir / "mask.json", pattern);
  ASSERT_EQ(mkmc(concat(concat({"complete"}, with_flag("--inputs", inputs)),
                        {"--mask", (dir / "mask.json").string(), "--output-dir", (dir / "out").string(),
                         "--method", "pca", "--rank-criterion", "gk"})),
            0);
  const json trace = io::read_json(dir / "out" / "trace.json");
  const CompletionResult lib = run_completion(masked, pattern, CompletionConfig{});
  EXPECT_EQ(trace["rank"].get<Index>(), lib.rank);
  EXPECT_EQ(trace["dof"].get<Index>(), lib.dof);
  const auto objective = trace["objective"].get<std::vector<double>>();
  EXPECT_EQ(objective, lib.trace);
  for (std::size_t t = 1; t < objective.size(); ++t) EXPECT_LE(objective[t], objective[t - 1] + 1e-8);
  EXPECT_EQ(io::read_kernel(dir / "out" / "completed_2.csv"), lib.completed[2]);
}

TEST(CliComplete, FactorAnalysisReportsDegreesOfFreedom) {
  const fs::path dir = scratch_dir("complete_fa");
  const Index ell = 15;
  const auto truth = synthetic(ell, 2, 6);
  const VisibilityPattern pattern = random_mask(ell, 2, 0.2, 6);
  const auto inputs = write_kernels(dir, mask_views(truth, pattern, Fill::Zero), io::MatrixFormat::Binary);
  io::write_mask(dir / "mask.json", pattern);
  ASSERT_EQ(mkmc(concat(concat({"complete"}, with_flag("--inputs", inputs)),
                        {"--mask", (dir / "mask.json").string(), "--output-dir", dir.string(), "--method",
                         "fa", "--rank", "3", "--threads", "2"})),
            0);
  const json trace = io::read_json(dir / "trace.json");
  EXPECT_EQ(trace["dof"].get<Index>(), 4 * ell - 3);
  EXPECT_EQ(trace["rank"].get<Index>(), 3);
  EXPECT_EQ(trace["method"], "fa");
}

TEST(CliComplete, ConfigFileOverridesFlags) {
  const fs::path dir = scratch_dir("complete_config");
  const auto truth = synthetic(10, 2, 7);
  const VisibilityPattern pattern = random_mask(10, 2, 0.2, 7);
  const auto inputs = write_kernels(dir, mask_views(truth, pattern, Fill::Zero), io::MatrixFormat::Csv);
  io::write_mask(dir / "mask.json", pattern);
  const json cfg = {{"method", "fa"}, {"rank", 2},           {"max_iters", 3},
                    {"inputs", inputs}, {"mask", (dir / "mask.json").string()}, {"output_dir", (dir / "out").string()}};
  io::write_text(dir / "run.json", cfg.dump());
  ASSERT_EQ(mkmc({"complete", "--method", "pca", "--config", (dir / "run.json").string()}), 0);
  const json trace = io::read_json(dir / "out" / "trace.json");
  EXPECT_EQ(trace["method"], "fa");
  EXPECT_EQ(trace["rank"], 2);
  EXPECT_LE(trace["iterations"].get<int>(), 3);
}

TEST(CliComplete, RankFlagsAreMutuallyExclusive) {
  EXPECT_EQ(mkmc({"complete", "--mask", "m.json", "--rank", "2", "--rank-criterion", "gk"}), 2);
}

// ---------------------------------------------------------------- evaluate

TEST(CliEvaluate, PerfectAndZeroCompletions) {
  const fs::path dir = scratch_dir("evaluate");
  const auto truth = synthetic(10, 2, 8);
  const VisibilityPattern pattern = random_mask(10, 2, 0.3, 8);
  const auto truth_paths = write_kernels(dir, truth, io::MatrixFormat::Csv, "truth");
  const auto zero_paths = write_kernels(dir, mask_views(truth, pattern, Fill::Zero), io::MatrixFormat::Csv, "zero");
  io::write_mask(dir / "mask.json", pattern);

  ASSERT_EQ(mkmc(concat(concat(concat({"evaluate"}, with_flag("--truth", truth_paths)),
                               with_flag("--completed", truth_paths)),
                        {"--mask", (dir / "mask.json").string(), "--out", (dir / "perfect.json").string()})),
            0);
  const RecoveryReport perfect = io::report_from_json(io::read_json(dir / "perfect.json"));
  EXPECT_EQ(perfect.mean_relative_error, 0.0);

  ASSERT_EQ(mkmc(concat(concat(concat({"evaluate"}, with_flag("--truth", truth_paths)),
                               with_flag("--completed", zero_paths)),
                        {"--mask", (dir / "mask.json").string(), "--out", (dir / "zero.json").string()})),
            0);
  const RecoveryReport zero = io::report_from_json(io::read_json(dir / "zero.json"));
  EXPECT_DOUBLE_EQ(zero.mean_relative_error, 1.0);
  EXPECT_DOUBLE_EQ(zero.baseline_errors.at("zero"), 1.0);
}

TEST(CliEvaluate, CountMismatchIsDimensionError) {
  const fs::path dir = scratch_dir("evaluate_mismatch");
  const auto truth = synthetic(6, 2, 9);
  const auto paths = write_kernels(dir, truth, io::MatrixFormat::Csv);
  io::write_mask(dir / "mask.json", VisibilityPattern(6, {{1}, {2}}));
  EXPECT_EQ(mkmc(concat(concat({"evaluate", "--mask", (dir / "mask.json").string()}, with_flag("--truth", paths)),
                        {"--completed", paths[0]})),
            3);
}

// ---------------------------------------------------------------- synth

TEST(CliSynth, WritesGeneratorOutput) {
  const fs::path dir = scratch_dir("synth");
  ASSERT_EQ(mkmc({"synth", "--ell", "9", "--views", "2", "--rank", "2", "--jitter", "0.1", "--seed", "3",
                  "--format", "bin", "--out-dir", dir.string()}),
            0);
  SyntheticSpec spec;
  spec.ell = 9;
  spec.num_views = 2;
  spec.true_rank = 2;
  spec.per_view_jitter = 0.1;
  spec.seed = 3;
  const auto expected = generate_synthetic(spec);
  EXPECT_EQ(io::read_kernel(dir / "truth_0.bin"), expected[0]);
  EXPECT_EQ(io::read_kernel(dir / "truth_1.bin"), expected[1]);
}

// ---------------------------------------------------------------- exit codes

TEST(CliExitCodes, NonPdVisibleBlock) {
  const fs::path dir = scratch_dir("exit_pd");
  Matrix bad = Matrix::Identity(4, 4);
  bad(0, 0) = -1.0;
  io::write_matrix(dir / "bad.csv", bad, io::MatrixFormat::Csv);
  io::write_mask(dir / "mask.json", VisibilityPattern(4, {{3}}));
  const std::string args = "complete --inputs " + (dir / "bad.csv").string() + " --mask " +
                           (dir / "mask.json").string() + " --output-dir " + (dir / "out").string();
  EXPECT_EQ(mkmc({"complete", "--inputs", (dir / "bad.csv").string(), "--mask", (dir / "mask.json").string(),
                  "--output-dir", (dir / "out").string()}),
            4);
  EXPECT_EQ(mkmc_process(args), 4);
}

TEST(CliExitCodes, MissingFile) {
  const fs::path dir = scratch_dir("exit_missing");
  EXPECT_EQ(mkmc({"mask", "--inputs", (dir / "nope.csv").string(), "--fraction", "0.1"}), 2);
  EXPECT_EQ(mkmc_process("mask --inputs " + (dir / "nope.csv").string() + " --fraction 0.1"), 2);
}

TEST(CliExitCodes, BadConfig) {
  const fs::path dir = scratch_dir("exit_config");
  io::write_text(dir / "bad.json", R"({"method": "pca", "bogus": 1})");
  EXPECT_EQ(mkmc({"complete", "--config", (dir / "bad.json").string()}), 2);
  io::write_text(dir / "broken.json", "{not json");
  EXPECT_EQ(mkmc({"complete", "--config", (dir / "broken.json").string()}), 2);
  EXPECT_EQ(mkmc_process("complete --config " + (dir / "bad.json").string()), 2);
}

TEST(CliExitCodes, MaskDimensionMismatch) {
  const fs::path dir = scratch_dir("exit_dim");
  const auto inputs = write_kernels(dir, synthetic(6, 1, 10), io::MatrixFormat::Csv);
  io::write_mask(dir / "mask.json", VisibilityPattern(7, {{1}}));
  EXPECT_EQ(mkmc({"complete", "--inputs", inputs[0], "--mask", (dir / "mask.json").string(), "--output-dir",
                  dir.string()}),
            3);
  EXPECT_EQ(mkmc_process("complete --inputs " + inputs[0] + " --mask " + (dir / "mask.json").string() +
                         " --output-dir " + dir.string()),
            3);
}

TEST(CliExitCodes, UsageErrorsAndHelp) {
  EXPECT_EQ(mkmc({"frobnicate"}), 2);
  EXPECT_EQ(mkmc({"mask", "--fraction", "0.1"}), 2);
  EXPECT_EQ(mkmc({"--help"}), 0);
  EXPECT_EQ(mkmc_process("--help"), 0);
}

}  // namespace
}  // namespace mkmc
