#include <gtest/gtest.h>

#include <unistd.h>

#include "cmv/config.hpp"

using cmv::BadParameter;
using cmv::RunConfig;

TEST(Config, DefaultsRoundTrip) {
  const RunConfig def;
  EXPECT_EQ(RunConfig::parse(def.serialize()), def);
  EXPECT_EQ(def.K, 300u);
  EXPECT_EQ(def.alpha, 0.55);
  EXPECT_EQ(def.get("clip"), "none");
  EXPECT_EQ(def.get("metric"), "euclidean");
}

TEST(Config, RoundTripOddValues) {
  RunConfig cfg;
  cfg.corpus = "/tmp/some corpus.txt";
  cfg.alpha = 0.1 + 0.2;
  cfg.lambda = 1.0 / 3.0;
  cfg.shift = 1e300;
  cfg.m = 5e-324;
  cfg.clip = 2.0 / 7.0;
  cfg.cost_norm = cmv::ot::CostNorm::log;
  cfg.metric = cmv::Metric::entailment;
  cfg.seed = 18446744073709551615ull;
  cfg.hyponym_source = false;
  cfg.sif_a = 1e-3;
  const auto back = RunConfig::parse(cfg.serialize());
  EXPECT_EQ(back, cfg);
  EXPECT_EQ(back.serialize(), cfg.serialize());
}

TEST(Config, KeysAreCompleteAndOrdered) {
  const RunConfig cfg;
  const auto keys = RunConfig::keys();
  std::string expected;
  for (const auto& k : keys) expected += k + "=" + cfg.get(k) + "\n";
  EXPECT_EQ(cfg.serialize(), expected);
  for (const auto& k : keys) {
    RunConfig c;
    EXPECT_NO_THROW(c.set(k, cfg.get(k))) << k;
  }
}

TEST(Config, CommentsAndWhitespace) {
  const auto cfg = RunConfig::parse("# header\n\n  K = 12 \r\n\t# note\nlambda=0.5\nclip = 3\n");
  EXPECT_EQ(cfg.K, 12u);
  EXPECT_EQ(cfg.lambda, 0.5);
  ASSERT_TRUE(cfg.clip);
  EXPECT_EQ(*cfg.clip, 3.0);
  EXPECT_FALSE(RunConfig::parse("clip=none\n").clip);
}

TEST(Config, Rejections) {
  EXPECT_THROW(RunConfig::parse("bogus=1\n"), BadParameter);
  EXPECT_THROW(RunConfig::parse("K\n"), BadParameter);
  EXPECT_THROW(RunConfig::parse("K=abc\n"), BadParameter);
  EXPECT_THROW(RunConfig::parse("K=12x\n"), BadParameter);
  EXPECT_THROW(RunConfig::parse("alpha=0.5.1\n"), BadParameter);
  EXPECT_THROW(RunConfig::parse("pc_removal=maybe\n"), BadParameter);
  EXPECT_THROW(RunConfig::parse("cost_norm=mean\n"), BadParameter);
  EXPECT_THROW(RunConfig::parse("metric=manhattan\n"), BadParameter);
}

TEST(Config, RangeValidation) {
  for (const char* line : {"K=0", "window=0", "min_count=0", "alpha=1.5", "alpha=nan", "shift=0.5", "beta=-0.1",
                           "lambda=0", "lambda=-1", "p=3", "iters=0", "tol=-1", "m=1.01", "clip=0", "sif_a=-1",
                           "precision=0", "precision=18", "kmeans_iters=0"}) {
    EXPECT_THROW(RunConfig::parse(std::string(line) + "\n"), BadParameter) << line;
  }
  EXPECT_NO_THROW(RunConfig::parse("alpha=0\nbeta=1\nm=1\np=2\n"));
}

TEST(Config, SaveAndLoad) {
  const auto path = std::filesystem::temp_directory_path() / ("cmv_cfg_" + std::to_string(::getpid()) + ".cfg");
  RunConfig cfg;
  cfg.window = 3;
  cfg.beta = 0.5;
  cfg.save(path);
  EXPECT_EQ(RunConfig::load(path), cfg);
  std::filesystem::remove(path);
  EXPECT_THROW(RunConfig::load(path), cmv::IoError);
  EXPECT_THROW(cfg.save("/nonexistent_dir/x.cfg"), cmv::IoError);
}
