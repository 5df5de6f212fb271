#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "rasim/metrics.hpp"

using namespace rasim;

namespace {

std::vector<double> tied_sample(std::mt19937_64& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = static_cast<double>(rng() % 6) * 0.25;
  return v;
}

}  // namespace

TEST(Cosine, Cases) {
  Vec a = (Vec(3) << 1, 2, 3).finished();
  EXPECT_DOUBLE_EQ(infer_similarity(a, a), 1.0);
  EXPECT_EQ(infer_similarity((Vec(2) << 1, 0).finished(), (Vec(2) << 0, 5).finished()), 0.0);
  EXPECT_EQ(infer_similarity(Vec::Zero(3), a), 0.0);
  EXPECT_THROW(infer_similarity(a, Vec::Zero(2)), ShapeError);
}

TEST(Cosine, ScaleInvariant) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0, 1);
  std::uniform_real_distribution<double> s(0.01, 100);
  for (int i = 0; i < 500; ++i) {
    Vec a(6), b(6);
    for (long j = 0; j < 6; ++j) {
      a(j) = g(rng);
      b(j) = g(rng);
    }
    EXPECT_NEAR(infer_similarity(s(rng) * a, s(rng) * b), infer_similarity(a, b), 1e-12);
  }
}

TEST(Correlation, Identity) {
  std::vector<double> x{0.1, 0.5, 0.2, 0.9};
  auto c = correlations(x, x);
  EXPECT_DOUBLE_EQ(c.pearson, 1.0);
  EXPECT_DOUBLE_EQ(c.spearman, 1.0);
}

TEST(Correlation, Reversed) {
  auto c = correlations({1, 2, 3}, {3, 2, 1});
  EXPECT_DOUBLE_EQ(c.pearson, -1.0);
  EXPECT_DOUBLE_EQ(c.spearman, -1.0);
}

TEST(Correlation, RankDifferenceExample) {
  EXPECT_NEAR(spearman({1, 2, 3, 4}, {1, 3, 2, 4}), 0.8, 1e-12);
}

TEST(Correlation, Errors) {
  EXPECT_THROW(pearson({1, 2}, {1, 2, 3}), DataError);
  EXPECT_THROW(pearson({1}, {1}), DataError);
  EXPECT_THROW(pearson({1, 2, 3}, {1, 1, 1}), DataError);
  EXPECT_THROW(spearman({1, 2, 3}, {2, 2, 2}), DataError);
}

TEST(Correlation, AverageRanks) {
  EXPECT_EQ(average_ranks({10, 20, 20, 5}), (std::vector<double>{2, 3.5, 3.5, 1}));
}

TEST(Correlation, MatchesOracleWithTies) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0, 1);
  for (int i = 0; i < 100; ++i) {
    std::size_t n = 3 + rng() % 60;
    auto labels = tied_sample(rng, n);
    std::vector<double> pred(n);
    for (std::size_t j = 0; j < n; ++j) pred[j] = (i % 2) ? labels[j] + g(rng) : std::round(g(rng) * 2);
    if (*std::min_element(labels.begin(), labels.end()) == *std::max_element(labels.begin(), labels.end()))
      continue;
    if (*std::min_element(pred.begin(), pred.end()) == *std::max_element(pred.begin(), pred.end()))
      continue;
    EXPECT_NEAR(pearson(pred, labels), oracle::pearson(pred, labels), 1e-9);
    EXPECT_NEAR(spearman(pred, labels), oracle::spearman(pred, labels), 1e-9);
  }
}

TEST(Correlation, SpearmanMonotoneInvariance) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0, 1);
  std::vector<double> x(80), y(80), cubed(80), shifted(80);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = g(rng);
    y[i] = x[i] + g(rng);
    cubed[i] = x[i] * x[i] * x[i];
    shifted[i] = 3 * x[i] + 7;
  }
  EXPECT_EQ(spearman(x, y), spearman(cubed, y));
  EXPECT_NEAR(spearman(x, y), spearman(shifted, y), 1e-15);
  EXPECT_NEAR(pearson(x, y), pearson(shifted, y), 1e-12);
}
