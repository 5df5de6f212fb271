#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "rasim/config.hpp"

using namespace rasim;

namespace {

PipelineConfig parse(const std::string& text, bool offgrid = false) {
  std::istringstream in(text);
  return parse_config(in, "test.conf", offgrid);
}

}  // namespace

TEST(Config, EmptyFileGivesDefaults) {
  auto c = parse("");
  EXPECT_EQ(c.k, 5u);
  EXPECT_EQ(c.layers, 2u);
  EXPECT_EQ(c.iterations, 2u);
  EXPECT_EQ(c.alpha, 0.5);
  EXPECT_EQ(c.eval_every, 100u);
  EXPECT_EQ(c.describe(), PipelineConfig{}.describe());
}

TEST(Config, CommentsAndWhitespace) {
  auto c = parse("# header\n  k = 7   # trailing\n\nalpha=0.25\neval_seeds = 1, 2,3\n");
  EXPECT_EQ(c.k, 7u);
  EXPECT_EQ(c.alpha, 0.25);
  EXPECT_EQ(c.eval_seeds, (std::vector<std::size_t>{1, 2, 3}));
}

TEST(Config, AlphaOutOfRange) {
  EXPECT_THROW(parse("alpha = 1.5\n"), ConfigError);
  EXPECT_THROW(parse("alpha = 1.5\n", true), ConfigError);
  EXPECT_THROW(parse("alpha = -0.1\n"), ConfigError);
}

TEST(Config, GridValuesAccepted) {
  EXPECT_EQ(parse("k = 50\n").k, 50u);
  EXPECT_EQ(parse("learning_rate = 2e-4\n").learning_rate, 2e-4);
  EXPECT_EQ(parse("margin_c = 0.02\n").margin_c, 0.02);
}

TEST(Config, OffGridNeedsFlag) {
  EXPECT_THROW(parse("k = 4\n"), ConfigError);
  EXPECT_EQ(parse("k = 4\n", true).k, 4u);
  EXPECT_THROW(parse("batch_size = 16\n"), ConfigError);
  EXPECT_THROW(parse("learning_rate = 1e-3\n"), ConfigError);
}

TEST(Config, UnknownAndDuplicateKeys) {
  try {
    parse("k = 5\nbogus = 1\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("bogus"), std::string::npos);
  }
  EXPECT_THROW(parse("k = 5\nk = 7\n"), ConfigError);
  EXPECT_THROW(parse("just words\n"), ConfigError);
}

TEST(Config, BadValues) {
  EXPECT_THROW(parse("k = five\n"), ConfigError);
  EXPECT_THROW(parse("k = -3\n"), ConfigError);
  EXPECT_THROW(parse("normalize = maybe\n"), ConfigError);
  EXPECT_THROW(parse("alpha = x\n"), ConfigError);
  EXPECT_THROW(parse("supervised_epochs = 6\n"), ConfigError);
}

TEST(Config, DescribeRoundTrips) {
  auto c = parse("k = 7\nalpha = 0.3\nsupervised = true\neval_seeds = 4,5\ncorpus = /x/y.jsonl\n");
  auto again = parse(c.describe());
  EXPECT_EQ(again.describe(), c.describe());
  EXPECT_EQ(again.hash(), c.hash());
  EXPECT_NE(c.hash(), PipelineConfig{}.hash());
}

TEST(Config, RelativePathsResolveAgainstFile) {
  auto dir = std::filesystem::temp_directory_path() / "rasim_cfg_dir";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "a.conf") << "corpus = data/c.jsonl\nwork_dir = /abs/work\n";
  auto c = load_config(dir / "a.conf");
  EXPECT_EQ(c.corpus, (dir / "data/c.jsonl").string());
  EXPECT_EQ(c.work_dir, "/abs/work");
  EXPECT_THROW(load_config(dir / "missing.conf"), ConfigError);
}

TEST(Config, TrainConfigMirrorsFields) {
  auto c = parse("learning_rate = 2e-4\nbatch_size = 8\nfanout_r = 3\nseed = 9\n");
  auto t = c.train_config();
  EXPECT_EQ(t.learning_rate, 2e-4);
  EXPECT_EQ(t.batch_size, 8u);
  EXPECT_EQ(t.sampling.fanout_r, 3u);
  EXPECT_EQ(t.seed, 9u);
  EXPECT_EQ(c.effective_eval_seeds(), (std::vector<std::size_t>{9}));
}

TEST(Config, HashIgnoresWorkDir) {
  auto a = parse("work_dir = /tmp/a\n"), b = parse("work_dir = /tmp/b\n");
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_NE(a.hash(), parse("work_dir = /tmp/a\nk = 7\n").hash());
}
