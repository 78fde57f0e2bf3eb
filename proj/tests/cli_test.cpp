#include "tsgan/cli/config.hpp"
#include "tsgan/cli/pipeline.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <regex>
#include <set>

#include "oracles.hpp"

namespace tsgan::cli {
namespace {

namespace fs = std::filesystem;

// Small sinusoid pipeline: 16 windows of 64 samples as 8x8 images.
PipelineConfig small_config(const fs::path& out) {
  ConfigMap map{{"window_len", "64"},      {"width", "8"},     {"height", "8"},       {"count", "16"},
                {"rate_hz", "64"},         {"batch_size", "8"}, {"epochs", "1"},       {"latent_dim", "4"},
                {"generator_hidden", "8"}, {"critic_hidden", "8"}, {"cutoff_hz", "10"}, {"taps", "31"},
                {"out_dir", out.string()}};
  return parse_config(map);
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = test::read_file(e.path());
  return files;
}

std::size_t count_matches(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

TEST(Config, PrecedenceIsCliOverFileOverDefaults) {
  const auto dir = test::scratch_dir("cfg");
  test::write_file(dir / "a.conf", "# comment\nseed = 5\nepochs = 7   # trailing\n\nlearning_rate=0.001\n");
  ConfigMap map;
  merge_config_file(map, (dir / "a.conf").string());
  merge_overrides(map, {"--seed", "9", "--batch-size=16"});
  const auto c = parse_config(map);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.epochs, 7u);
  EXPECT_EQ(c.learning_rate, 0.001);
  EXPECT_EQ(c.batch_size, 16u);
  EXPECT_EQ(c.n_critic, 5u);
  EXPECT_EQ(c.gp_lambda, 10.0);
}

TEST(Config, RejectsUnknownKeysAndMalformedValues) {
  EXPECT_THROW(parse_config({{"sed", "1"}}), ConfigError);
  EXPECT_THROW(parse_config({{"epochs", "-1"}}), ConfigError);
  EXPECT_THROW(parse_config({{"rate_hz", "abc"}}), ConfigError);
  ConfigMap map;
  EXPECT_THROW(merge_overrides(map, {"--seed"}), ConfigError);
  EXPECT_THROW(merge_overrides(map, {"seed", "1"}), ConfigError);
}

TEST(Config, RepeatedInputAccumulates) {
  ConfigMap map;
  merge_overrides(map, {"--input", "a.csv", "--input", "b.csv"});
  EXPECT_EQ(parse_config(map).inputs, (std::vector<std::string>{"a.csv", "b.csv"}));
}

TEST(Prepare, DimsMismatchFailsBeforeWriting) {
  const auto dir = test::scratch_dir("prep_dims");
  auto c = small_config(dir / "out");
  c.window_len = 4096;
  c.width = c.height = 32;
  EXPECT_THROW(cmd_prepare(c), ConfigError);
  EXPECT_FALSE(fs::exists(dir / "out"));
}

TEST(Prepare, WritesNamedImagesSpecAndManifestDeterministically) {
  const auto dir = test::scratch_dir("prep");
  const auto c = small_config(dir / "out");
  const fs::path data = cmd_prepare(c);
  EXPECT_EQ(data, dir / "out" / "dataset");
  const auto first = snapshot(data);
  EXPECT_EQ(first.size(), 16u + 2u);
  EXPECT_TRUE(first.count("win_000000.pgm"));
  EXPECT_TRUE(first.count("win_000015.pgm"));
  EXPECT_TRUE(first.count("sinusoid.spec"));
  EXPECT_EQ(first.at("manifest.txt").substr(0, 30), "win_000000.pgm\nwin_000001.pgm\n");
  cmd_prepare(c);
  EXPECT_EQ(snapshot(data), first);
}

TEST(Prepare, CsvSourceIsSegmented) {
  const auto dir = test::scratch_dir("prep_csv");
  std::string csv = "value\n";
  for (int i = 0; i < 200; ++i) csv += std::to_string(std::sin(0.1 * i)) + "\n";
  test::write_file(dir / "ecg.csv", csv);
  auto c = small_config(dir / "out");
  c.source = "csv";
  c.input_csv = (dir / "ecg.csv").string();
  // Windows of 70 samples cut to the first 64.
  c.segment_len = 70;
  const auto loaded = load_image_dir(cmd_prepare(c));
  EXPECT_EQ(loaded.images.size(), 2u);
}

TEST(Train, OneEpochGivesNCriticRowsPerBatch) {
  const auto dir = test::scratch_dir("train");
  const auto c = small_config(dir / "out");
  cmd_prepare(c);
  const auto out = cmd_train(c);
  const auto trace = test::read_file(out.trace);
  EXPECT_EQ(trace.rfind("iteration,critic_loss,gp_term,w1_estimate\n", 0), 0u);
  EXPECT_EQ(count_matches(trace, "\n"), 1u + 5u * 2u);
  EXPECT_TRUE(fs::exists(out.checkpoint));
  EXPECT_EQ(load_checkpoint(out.checkpoint.string()), out.result.checkpoint);
}

TEST(Train, MissingDatasetIsIoErrorAndWritesNothing) {
  const auto dir = test::scratch_dir("train_missing");
  const auto c = small_config(dir / "out");
  EXPECT_THROW(cmd_train(c), IoError);
  EXPECT_FALSE(fs::exists(c.checkpoint_path()));
}

TEST(Train, DatasetDimsMustMatchConfig) {
  const auto dir = test::scratch_dir("train_dims");
  auto c = small_config(dir / "out");
  cmd_prepare(c);
  c.width = 4;
  c.height = 16;
  EXPECT_THROW(cmd_train(c), ConfigError);
}

class Trained : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = test::scratch_dir("trained");
    cfg_ = small_config(dir_ / "out");
    cmd_prepare(cfg_);
    cmd_train(cfg_);
  }
  static inline fs::path dir_;
  static inline PipelineConfig cfg_;
};

TEST_F(Trained, GenerateWritesImagesAndSeriesInRange) {
  auto c = cfg_;
  c.generate_count = 2;
  const fs::path gen = cmd_generate(c);
  const auto files = snapshot(gen);
  std::size_t pgm = 0, csv = 0;
  for (const auto& [name, _] : files) {
    pgm += name.ends_with(".pgm");
    csv += name.ends_with(".csv");
  }
  EXPECT_EQ(pgm, 2u);
  EXPECT_EQ(csv, 4u);
  const auto spec = load_checkpoint(c.checkpoint_path()).spec;
  const auto raw = read_numeric_csv(gen / "gen_000001_raw.csv", 2);
  ASSERT_EQ(raw[1].size(), 64u);
  for (double v : raw[1]) {
    EXPECT_GE(v, spec.lo);
    EXPECT_LE(v, spec.hi);
  }
  EXPECT_EQ(files.at("gen_000000_raw.csv").substr(0, 19), "t_seconds,amplitude");

  cmd_generate(c);
  EXPECT_EQ(snapshot(gen), files);
}

TEST_F(Trained, EvaluateSelfComparisonAndReportKeys) {
  auto c = cfg_;
  c.fake_dir = c.dataset_dir();
  c.eval_w1 = true;
  const auto out = cmd_evaluate(c);
  EXPECT_LT(out.report.fid, 1e-8);
  std::set<std::string> keys;
  std::stringstream ss(test::read_file(out.report_path));
  std::string line;
  while (std::getline(ss, line)) keys.insert(line.substr(0, line.find('=')));
  EXPECT_EQ(keys, (std::set<std::string>{"fid", "mmd", "w1_critic", "n_real", "n_fake", "bandwidth"}));
  EXPECT_TRUE(fs::exists(fs::path(c.out_dir) / "spectrum_real.csv"));
  EXPECT_EQ(test::read_file(fs::path(c.out_dir) / "spectrum_fake.csv").substr(0, 22), "frequency_hz,magnitude");

  c.eval_w1 = false;
  keys.clear();
  std::stringstream ss2(format_report(cmd_evaluate(c).report));
  while (std::getline(ss2, line)) keys.insert(line.substr(0, line.find('=')));
  EXPECT_EQ(keys, (std::set<std::string>{"fid", "mmd", "n_real", "n_fake", "bandwidth"}));
}

TEST_F(Trained, EvaluateRejectsEmptyOrMismatchedFakeDir) {
  auto c = cfg_;
  fs::create_directories(dir_ / "empty");
  c.fake_dir = (dir_ / "empty").string();
  EXPECT_THROW(cmd_evaluate(c), ParameterError);

  auto other = small_config(dir_ / "other");
  other.window_len = 64;
  other.width = 4;
  other.height = 16;
  c.fake_dir = cmd_prepare(other).string();
  EXPECT_THROW(cmd_evaluate(c), ParameterError);
}

TEST_F(Trained, PlotKinds) {
  auto c = cfg_;
  auto big = small_config(dir_ / "big");
  big.count = 70;
  c.kind = "grid";
  c.inputs = {cmd_prepare(big).string()};
  const auto grid = test::read_file(cmd_plot(c));
  EXPECT_EQ(count_matches(grid, "<image "), 64u);
  EXPECT_EQ(grid.rfind("<svg", 0), 0u);

  c.kind = "trace";
  c.inputs = {(fs::path(c.out_dir) / "trace.csv").string(), (fs::path(c.out_dir) / "trace.csv").string()};
  EXPECT_EQ(count_matches(test::read_file(cmd_plot(c)), "<polyline"), 2u);

  c.generate_count = 2;
  const auto gen = cmd_generate(c);
  c.kind = "series";
  c.inputs = {(gen / "gen_000000_raw.csv").string()};
  const auto series = test::read_file(cmd_plot(c));
  EXPECT_EQ(count_matches(series, "<polyline"), 2u);
  EXPECT_NE(series.find("raw"), std::string::npos);
  EXPECT_NE(series.find("filtered"), std::string::npos);

  c.kind = "spectrum";
  c.inputs = {(fs::path(c.out_dir) / "spectrum_real.csv").string()};
  c.fake_dir.clear();
  cmd_evaluate(c);
  EXPECT_EQ(count_matches(test::read_file(cmd_plot(c)), "<polyline"), 1u);

  c.kind = "histogram";
  EXPECT_THROW(cmd_plot(c), ConfigError);
}

int run_cli(const std::string& args) {
  const int status = std::system((std::string(TSGAN_CLI_PATH) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Binary, FullPipelineAndExitCodes) {
  const auto dir = test::scratch_dir("binary");
  const std::string out = (dir / "out").string();
  test::write_file(dir / "small.conf",
                   "window_len = 64\nwidth = 8\nheight = 8\ncount = 16\nrate_hz = 64\nbatch_size = 8\n"
                   "epochs = 1\nlatent_dim = 4\ngenerator_hidden = 8\ncritic_hidden = 8\ntaps = 31\n");
  const std::string base = "--config " + (dir / "small.conf").string() + " --out-dir " + out;
  EXPECT_EQ(run_cli("prepare " + base), 0);
  EXPECT_EQ(run_cli("train " + base), 0);
  EXPECT_EQ(run_cli("generate " + base), 0);
  EXPECT_EQ(run_cli("evaluate " + base), 0);
  EXPECT_EQ(run_cli("plot " + base + " --kind grid --input " + out + "/generated"), 0);
  EXPECT_TRUE(fs::exists(dir / "out" / "plot_grid.svg"));

  EXPECT_EQ(run_cli("prepare " + base + " --width 4"), 2);
  EXPECT_EQ(run_cli("plot " + base + " --kind pie --input x"), 2);
  EXPECT_EQ(run_cli("train " + base + " --data-dir " + (dir / "nope").string()), 3);
  EXPECT_EQ(run_cli("prepare --config " + (dir / "missing.conf").string()), 3);
}

}  // namespace
}  // namespace tsgan::cli
