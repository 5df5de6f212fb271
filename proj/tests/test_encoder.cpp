#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "rasim/encoder.hpp"

using namespace rasim;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& body) {
  auto p = std::filesystem::temp_directory_path() / name;
  std::ofstream(p) << body;
  return p;
}

}  // namespace

TEST(HashMean, SingleTokenIsItsBucketRow) {
  auto enc = init_encoder(8, 97, 3);
  auto e = enc.encode("laser");
  Vec row = enc.table().row(token_bucket("laser", 97)).transpose();
  EXPECT_EQ(e.value, row);
  EXPECT_EQ(e.buckets.size(), 1u);
}

TEST(HashMean, TwoBucketMean) {
  auto enc = init_encoder(3, 1024, 1);
  auto a = token_bucket("alpha", 1024), b = token_bucket("beta", 1024);
  ASSERT_NE(a, b);
  enc.table().row(a) << 1, 2, 3;
  enc.table().row(b) << 3, 0, -1;
  EXPECT_EQ(enc.encode("alpha beta").value, (Vec(3) << 2, 1, 1).finished());
}

TEST(HashMean, RepeatedTokenCountsTwice) {
  auto enc = init_encoder(2, 1024, 1);
  auto a = token_bucket("x", 1024), b = token_bucket("y", 1024);
  enc.table().row(a) << 3, 0;
  enc.table().row(b) << 0, 3;
  EXPECT_EQ(enc.encode("x x y").value, (Vec(2) << 2, 1).finished());
}

TEST(HashMean, EmptyTextIsZero) {
  auto enc = init_encoder(5, 16, 0);
  EXPECT_TRUE(enc.encode("").value.isZero(0));
  EXPECT_TRUE(enc.encode(" ,;. ").value.isZero(0));
}

TEST(HashMean, SameSeedSameTable) {
  EXPECT_EQ(init_encoder(4, 50, 9).table(), init_encoder(4, 50, 9).table());
  EXPECT_NE(init_encoder(4, 50, 9).table(), init_encoder(4, 50, 10).table());
}

TEST(HashMean, SingleScalarConfiguration) {
  auto enc = init_encoder(1, 1, 0);
  EXPECT_EQ(enc.encode("anything").value, enc.encode("else entirely").value);
  EXPECT_EQ(enc.table().size(), 1);
}

TEST(HashMean, InitScale) {
  auto enc = init_encoder(64, 4096, 5);
  double ss = enc.table().squaredNorm() / static_cast<double>(enc.table().size());
  EXPECT_NEAR(std::sqrt(ss), TextEncoder::kInitStddev, 0.001);
}

TEST(HashMean, RejectsZeroSizes) {
  EXPECT_THROW(init_encoder(0, 10, 0), std::invalid_argument);
  EXPECT_THROW(init_encoder(10, 0, 0), std::invalid_argument);
}

TEST(HashMean, ScatterGradientSpreadsEvenly) {
  auto enc = init_encoder(2, 1024, 1);
  auto e = enc.encode("x x y");
  RowMat g = RowMat::Zero(1024, 2);
  enc.scatter_gradient(e, (Vec(2) << 3, 6).finished(), g);
  EXPECT_DOUBLE_EQ(g(token_bucket("x", 1024), 0), 2.0);
  EXPECT_DOUBLE_EQ(g(token_bucket("y", 1024), 1), 2.0);
}

TEST(Precomputed, ParsesRows) {
  auto p = write_temp("rasim_pre_ok.tsv", "dim=4\nlaser beam\t1 2 3 4\nP1\t0 0 0 1\n");
  auto enc = load_precomputed(p);
  EXPECT_EQ(enc.dim(), 4u);
  EXPECT_EQ(enc.lookup("laser beam"), (Vec(4) << 1, 2, 3, 4).finished());
  EXPECT_FALSE(enc.trainable());
}

TEST(Precomputed, ShortRowNamesLine) {
  auto p = write_temp("rasim_pre_short.tsv", "dim=4\na\t1 2 3 4\nb\t1 2 3\n");
  try {
    load_precomputed(p);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
}

TEST(Precomputed, BadHeaderAndDuplicates) {
  EXPECT_THROW(load_precomputed(write_temp("rasim_pre_hdr.tsv", "a\t1\n")), DataError);
  EXPECT_THROW(load_precomputed(write_temp("rasim_pre_dup.tsv", "dim=1\na\t1\na\t2\n")), DataError);
  EXPECT_THROW(load_precomputed(write_temp("rasim_pre_nan.tsv", "dim=1\na\tx\n")), DataError);
  EXPECT_THROW(load_precomputed("/nonexistent/rasim.tsv"), DataError);
}

TEST(Precomputed, MissingIdFallback) {
  auto p = write_temp("rasim_pre_fb.tsv", "dim=2\na\t1 1\n");
  EXPECT_THROW(load_precomputed(p).lookup("b"), DataError);
  EXPECT_TRUE(load_precomputed(p, true).lookup("b").isZero(0));
}

TEST(RandomFixed, DeterministicPerId) {
  auto a = TextEncoder::random_fixed(6, 4), b = TextEncoder::random_fixed(6, 4);
  EXPECT_EQ(a.lookup("x"), b.lookup("x"));
  EXPECT_NE(a.lookup("x"), a.lookup("y"));
  EXPECT_THROW(a.encode("x"), std::logic_error);
}
