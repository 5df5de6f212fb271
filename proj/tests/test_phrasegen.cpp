#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "oracles.hpp"
#include "rasim/phrasegen.hpp"

using namespace rasim;

TEST(Rake, WorkedExample) {
  auto hits = rake_extract("red apples grow on tall trees", {"on"}, 3);
  ASSERT_EQ(hits.size(), 2u);
  EXPECT_EQ(hits[0].text, "red apples grow");
  EXPECT_DOUBLE_EQ(hits[0].rake_score, 9.0);
  EXPECT_EQ(hits[1].text, "tall trees");
  EXPECT_DOUBLE_EQ(hits[1].rake_score, 4.0);
}

TEST(Rake, AllStopwords) { EXPECT_TRUE(rake_extract("the of and", {"the", "of", "and"}, 3).empty()); }

TEST(Rake, SingleWord) {
  auto hits = rake_extract("smartphone", {}, 1);
  ASSERT_EQ(hits.size(), 1u);
  EXPECT_EQ(hits[0].text, "smartphone");
  EXPECT_DOUBLE_EQ(hits[0].rake_score, 1.0);
}

TEST(Rake, PunctuationSplitsCandidates) {
  auto hits = rake_extract("solar cell, battery pack", {}, 5);
  ASSERT_EQ(hits.size(), 2u);
  EXPECT_EQ(hits[0].text, "solar cell");
  EXPECT_EQ(hits[1].text, "battery pack");
}

TEST(Rake, HyphenatedWordsStayTogether) {
  auto hits = rake_extract("heat-resistant coating of panels", {"of"}, 5);
  ASSERT_FALSE(hits.empty());
  EXPECT_EQ(hits[0].text, "heat resistant coating");
}

TEST(Rake, LongRunsAreDiscarded) {
  auto hits = rake_extract("a b c d e f g. short one", {}, 5);
  ASSERT_EQ(hits.size(), 1u);
  EXPECT_EQ(hits[0].text, "short one");
}

TEST(Rake, ZeroTopMIsRejected) { EXPECT_THROW(rake_extract("x", {}, 0), std::invalid_argument); }

TEST(Rake, ScoresNonIncreasing) {
  std::mt19937_64 rng(9);
  std::vector<std::string> words = {"laser", "beam", "of", "the", "and", "optical", "disc", "layer"};
  for (int t = 0; t < 100; ++t) {
    std::string s;
    for (int i = 0; i < 20; ++i) s += words[rng() % words.size()] + ((rng() % 5) ? " " : ". ");
    auto hits = rake_extract(s, default_stopwords(), 10);
    for (std::size_t i = 1; i < hits.size(); ++i) EXPECT_GE(hits[i - 1].rake_score, hits[i].rake_score);
  }
}

TEST(Rake, MatchesHandRuleOracle) {
  std::mt19937_64 rng(21);
  std::vector<std::string> words = {"laser", "beam", "optical", "disc", "layer", "signal", "rotor",
                                    "blade", "of", "the", "and", "with", "for", "a"};
  std::vector<std::string> seps = {" ", " ", " ", " ", ", ", ". ", "; ", " - "};
  std::set<std::string> stop = {"of", "the", "and", "with", "for", "a"};
  StopwordSet sw(stop.begin(), stop.end());
  for (int t = 0; t < 200; ++t) {
    std::string s;
    auto n = 3 + rng() % 25;
    for (std::size_t i = 0; i < n; ++i) s += words[rng() % words.size()] + seps[rng() % seps.size()];
    auto got = rake_extract(s, sw, 4);
    auto want = oracle::rake(s, stop, 4);
    ASSERT_EQ(got.size(), want.size()) << s;
    for (std::size_t i = 0; i < got.size(); ++i) {
      EXPECT_EQ(got[i].text, want[i].phrase) << s;
      EXPECT_EQ(got[i].rake_score, want[i].score) << s;
    }
  }
}

TEST(Normalize, Examples) {
  EXPECT_EQ(normalize_phrase("Recording  Layers"), "recording layer");
  EXPECT_EQ(normalize_phrase("light beam"), "light beam");
  EXPECT_EQ(normalize_phrase("Batteries"), "battery");
  EXPECT_EQ(normalize_phrase("glass"), "glass");
  EXPECT_EQ(normalize_phrase("gas"), "gas");
  EXPECT_EQ(normalize_phrase("Recording  Layers", false), "recording layers");
}

TEST(PhraseSet, MinFreqBoundary) {
  std::vector<PatentRecord> recs;
  for (int i = 0; i < 25; ++i) recs.push_back({"A" + std::to_string(100 + i), "solar panel", {}});
  for (int i = 0; i < 24; ++i) recs.push_back({"B" + std::to_string(100 + i), "wind turbine", {}});
  auto set = build_phrase_set(make_corpus(recs), default_stopwords(), {3, 25, false, {}});
  EXPECT_TRUE(set.phrases.count("solar panel"));
  EXPECT_FALSE(set.phrases.count("wind turbine"));
  EXPECT_EQ(set.phrases.at("solar panel"), 25u);
}

TEST(PhraseSet, DropsDigitsAndSingleLetters) {
  std::vector<PatentRecord> recs;
  for (int i = 0; i < 30; ++i) recs.push_back({"D" + std::to_string(100 + i), "42. x. real phrase", {}});
  auto set = build_phrase_set(make_corpus(recs), default_stopwords(), {3, 1, false, {}});
  EXPECT_FALSE(set.phrases.count("42"));
  EXPECT_FALSE(set.phrases.count("x"));
  EXPECT_TRUE(set.phrases.count("real phrase"));
}

TEST(PhraseSet, FrequencyIsDocumentLevel) {
  auto set = build_phrase_set(make_corpus({{"A", "fuel cell. fuel cell. fuel cell", {}}}),
                              default_stopwords(), {3, 1, false, {}});
  EXPECT_EQ(set.phrases.at("fuel cell"), 1u);
}

TEST(PhraseSet, InvariantToIngestionOrder) {
  std::mt19937_64 rng(4);
  std::vector<std::string> words = {"laser", "beam", "of", "optical", "disc", "and", "rotor", "blade"};
  std::vector<PatentRecord> recs;
  for (int i = 0; i < 60; ++i) {
    std::string s;
    for (int w = 0; w < 12; ++w) s += words[rng() % words.size()] + ((rng() % 4) ? " " : ". ");
    recs.push_back({"D" + std::to_string(i), s, {}});
  }
  auto a = build_phrase_set(make_corpus(recs), default_stopwords(), {3, 2, false, {}});
  std::shuffle(recs.begin(), recs.end(), rng);
  auto b = build_phrase_set(make_corpus(recs), default_stopwords(), {3, 2, false, {}});
  EXPECT_EQ(a.phrases, b.phrases);
}

TEST(PhraseSet, PhrasesAppearInSomeDocument) {
  std::mt19937_64 rng(8);
  std::vector<std::string> words = {"Laser", "beam", "of", "optical", "Disc", "and", "rotor", "blade"};
  std::vector<PatentRecord> recs;
  for (int i = 0; i < 40; ++i) {
    std::string s;
    for (int w = 0; w < 10; ++w) s += words[rng() % words.size()] + ((rng() % 4) ? " " : ", ");
    recs.push_back({"D" + std::to_string(i), s, {}});
  }
  auto corpus = make_corpus(recs);
  auto set = build_phrase_set(corpus, default_stopwords(), {3, 1, false, {}});
  for (const auto& [p, f] : set.phrases) {
    bool found = false;
    for (const auto& [id, rec] : corpus.patents) found = found || join(tokenize(rec.abstract)).find(p) != std::string::npos;
    EXPECT_TRUE(found) << p;
  }
}

TEST(PhraseSet, FileRoundTrip) {
  PhraseSet s;
  s.phrases = {{"alpha beta", 3}, {"gamma", 7}};
  auto p = std::filesystem::temp_directory_path() / "rasim_phrases.tsv";
  write_phrase_set(s, p);
  EXPECT_EQ(read_phrase_set(p).phrases, s.phrases);
}

TEST(Stopwords, DefaultListHashIsStable) {
  EXPECT_EQ(stopword_hash(default_stopwords()), stopword_hash(default_stopwords()));
  EXPECT_TRUE(default_stopwords().count("the"));
}
