#include <gtest/gtest.h>

#include <random>

#include "rasim/eval.hpp"

using namespace rasim;

namespace {

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<long>(xs.size()));
  long i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

}  // namespace

TEST(Uniformity, AntipodalPair) {
  EmbeddingMap e{{"a", vec({2, 0})}, {"b", vec({-0.5, 0})}};
  EXPECT_NEAR(uniformity_loss(e), -8.0, 1e-12);
}

TEST(Uniformity, MatchesDefinition) {
  EmbeddingMap e{{"a", vec({1, 0})}, {"b", vec({0, 3})}, {"c", vec({1, 1})}};
  double s = 0;
  std::vector<Vec> u{vec({1, 0}), vec({0, 1}), vec({1, 1}) / std::sqrt(2.0)};
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j) s += std::exp(-2 * (u[i] - u[j]).squaredNorm());
  EXPECT_NEAR(uniformity_loss(e), std::log(s / 3), 1e-12);
  EXPECT_THROW(uniformity_loss({{"a", vec({1})}}), DataError);
}

TEST(Alignment, IdenticalPositivesAreZero) {
  EmbeddingMap e{{"a", vec({1, 2})}, {"b", vec({2, 4})}, {"c", vec({-1, 0})}};
  std::vector<PhrasePair> pairs{{"a", "b", 1.0}, {"a", "c", 0.1}};
  EXPECT_EQ(alignment_loss(e, pairs), 0.0);
}

TEST(Alignment, ThresholdIsInclusive) {
  EmbeddingMap e{{"a", vec({1, 0})}, {"b", vec({0, 1})}};
  EXPECT_NEAR(alignment_loss(e, {{"a", "b", 0.75}}), 2.0, 1e-12);
  EXPECT_THROW(alignment_loss(e, {{"a", "b", 0.7499}}), DataError);
  EXPECT_THROW(alignment_uniformity({{"a", vec({1})}}, {{"a", "a", 1}}), DataError);
}

TEST(Neighbors, SelfExcluded) {
  EmbeddingMap c{{"q", vec({1, 0})}};
  EXPECT_TRUE(query_neighbors("q", vec({1, 0}), c).empty());
}

TEST(Neighbors, IdenticalDirectionFirst) {
  EmbeddingMap c{{"q", vec({1, 0})}, {"q variant", vec({3, 0})}, {"other", vec({1, 1})}};
  auto r = query_neighbors("q", vec({1, 0}), c);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0].phrase, "q variant");
  EXPECT_DOUBLE_EQ(r[0].similarity, 1.0);
}

TEST(Neighbors, MatchesExhaustiveSort) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0, 1);
  EmbeddingMap c;
  for (const char* p : {"alpha", "beta", "gamma", "delta", "epsilon"}) c[p] = vec({g(rng), g(rng), g(rng)});
  for (const auto& [q, qv] : c) {
    std::vector<std::pair<double, std::string>> all;
    for (const auto& [p, v] : c)
      if (p != q) all.push_back({-qv.dot(v) / (qv.norm() * v.norm()), p});
    std::sort(all.begin(), all.end());
    auto got = query_neighbors(q, qv, c, 5);
    ASSERT_EQ(got.size(), all.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      EXPECT_EQ(got[i].phrase, all[i].second);
      EXPECT_NEAR(got[i].similarity, -all[i].first, 1e-12);
    }
  }
  EXPECT_EQ(query_neighbors("alpha", c.at("alpha"), c, 2).size(), 2u);
}

TEST(Report, PerfectPredictions) {
  EmbeddingMap e{{"a", vec({1, 0})}, {"b", vec({1, 0})}, {"c", vec({0, 1})}, {"d", vec({1, 1})}};
  std::vector<PhrasePair> pairs{{"a", "b", 1.0}, {"a", "c", 0.0}, {"a", "d", std::sqrt(0.5)}};
  auto r = evaluate_embeddings(e, pairs);
  EXPECT_NEAR(r.pearson, 1.0, 1e-12);
  EXPECT_NEAR(r.spearman, 1.0, 1e-12);
  ASSERT_TRUE(r.alignment);
  EXPECT_EQ(r.pair_count, 3u);
  EXPECT_THROW(evaluate_embeddings(e, {}), DataError);
}

TEST(Report, MeanRow) {
  EvalReport a{0.1, 0.2, 0.3, -1.0, 10}, b{0.4, 0.5, 0.6, -2.0, 10}, c{0.7, 0.8, 0.9, -3.0, 10};
  auto m = mean_report({a, b, c});
  EXPECT_NEAR(m.pearson, 0.4, 1e-15);
  EXPECT_NEAR(m.spearman, 0.5, 1e-15);
  EXPECT_NEAR(*m.alignment, 0.6, 1e-15);
  EXPECT_NEAR(m.uniformity, -2.0, 1e-15);
  c.alignment.reset();
  EXPECT_FALSE(mean_report({a, c}).alignment);
  EXPECT_THROW(mean_report({}), std::invalid_argument);
}

TEST(Report, JsonShape) {
  auto j = to_json(EvalReport{0.5, 0.25, std::nullopt, -3, 4});
  EXPECT_TRUE(j["alignment"].is_null());
  EXPECT_EQ(j["pair_count"], 4);
  EXPECT_NE(format_report_row("x", EvalReport{}).find("alignment=n/a"), std::string::npos);
}

class RetrieveAvgTest : public ::testing::Test {
 protected:
  Corpus corpus = make_corpus({{"p1", "laser beam optics", {}}, {"p2", "rotor blade turbine", {}}});
  InvertedIndex index = build_index(corpus);
  TextEncoder encoder = init_encoder(8, 256, 3);
  RetrieveAvg ra{encoder, index, corpus};
};

TEST_F(RetrieveAvgTest, WeightOneIsPhraseEncoding) {
  EXPECT_EQ(ra.embed("laser", 1.0), encoder.encode("laser").value);
}

TEST_F(RetrieveAvgTest, WeightZeroIsTopPatent) {
  EXPECT_EQ(ra.embed("laser", 0.0), encoder.encode("laser beam optics").value);
}

TEST_F(RetrieveAvgTest, NoRetrievalFallsBack) {
  EXPECT_EQ(ra.embed("quantum", 0.3), encoder.encode("quantum").value);
}

TEST_F(RetrieveAvgTest, GridSearchCoversElevenWeights) {
  std::vector<PhrasePair> val{{"laser", "optics", 1.0}, {"laser", "rotor", 0.0}, {"blade", "turbine", 1.0},
                              {"beam", "blade", 0.0}};
  auto g = ra.grid_search(val);
  ASSERT_EQ(g.curve.size(), 11u);
  double best = -2;
  for (auto [w, s] : g.curve) best = std::max(best, s);
  EXPECT_EQ(g.spearman, best);
  for (auto [w, s] : g.curve)
    if (s == best) {
      EXPECT_EQ(g.weight, w);
      break;
    }
}

TEST(GraphOnly, UntrainedIsNearNullOnShuffledLabels) {
  std::mt19937_64 rng(5);
  std::vector<PatentRecord> recs;
  for (int d = 0; d < 80; ++d) {
    std::string text;
    for (int t = 0; t < 10; ++t) text += "w" + std::to_string(rng() % 60) + " ";
    recs.push_back({"P" + std::to_string(d), text, {"P" + std::to_string(rng() % 80)}});
  }
  auto corpus = make_corpus(recs);
  auto index = build_index(corpus);
  std::vector<std::string> phrases;
  for (int p = 0; p < 60; ++p) phrases.push_back("w" + std::to_string(p));
  auto u = Universe::build(corpus, phrases, index, 5);
  std::vector<PhrasePair> pairs;
  std::uniform_real_distribution<double> label(0, 1);
  for (int i = 0; i < 100; ++i) {
    auto a = rng() % 60, b = rng() % 60;
    if (a == b) b = (b + 1) % 60;
    pairs.push_back({phrases[a], phrases[b], label(rng)});
  }
  auto model = graph_only_model(16, 2, 9);
  auto r = evaluate(model, u, index, pairs, {2, 5, 5}, 1);
  EXPECT_LT(std::abs(r.pearson), 0.2);
  EXPECT_LT(std::abs(r.spearman), 0.2);
  EXPECT_EQ(evaluate(model, u, index, pairs, {2, 5, 5}, 1).spearman, r.spearman);
}
