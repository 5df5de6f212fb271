#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "rasim/corpus.hpp"
#include "rasim/errors.hpp"

namespace fs = std::filesystem;
using namespace rasim;

namespace {

fs::path write_temp(const std::string& name, const std::string& content) {
  auto p = fs::temp_directory_path() / ("rasim_corpus_" + name);
  std::ofstream(p) << content;
  return p;
}

}  // namespace

TEST(Ingest, DropsDanglingCitations) {
  auto p = write_temp("dangling.jsonl",
                      R"({"id":"A","abstract":"alpha beta","citations":["B"]})"
                      "\n"
                      R"({"id":"B","abstract":"beta gamma","citations":["C"]})"
                      "\n"
                      R"({"id":"C","abstract":"gamma delta","citations":["Z"]})"
                      "\n");
  IngestReport rep;
  auto c = ingest_corpus(p, &rep);
  EXPECT_EQ(c.size(), 3u);
  EXPECT_EQ(c.citations.size(), 2u);
  EXPECT_EQ(rep.dangling_dropped, 1u);
}

TEST(Ingest, EmptyFileIsAnError) {
  auto p = write_temp("empty.jsonl", "");
  try {
    ingest_corpus(p);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("empty corpus"), std::string::npos);
  }
}

TEST(Ingest, DuplicateIdIsAnError) {
  auto p = write_temp("dup.jsonl", R"({"id":"A","abstract":"x"})"
                                   "\n"
                                   R"({"id":"A","abstract":"y"})"
                                   "\n");
  EXPECT_THROW(ingest_corpus(p), DataError);
}

TEST(Ingest, MalformedLineReportsLineNumber) {
  auto p = write_temp("bad.jsonl", R"({"id":"A","abstract":"x"})"
                                   "\n{not json\n");
  try {
    ingest_corpus(p);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(Ingest, RejectsBlankAbstract) {
  auto p = write_temp("blank.jsonl", R"({"id":"A","abstract":"   "})"
                                     "\n");
  EXPECT_THROW(ingest_corpus(p), DataError);
}

TEST(Ingest, MissingFile) { EXPECT_THROW(ingest_corpus("/nonexistent/corpus.jsonl"), DataError); }

TEST(MakeCorpus, SelfAndDuplicateCitationsDropped) {
  IngestReport rep;
  auto c = make_corpus({{"A", "a", {"A", "B", "B"}}, {"B", "b", {}}}, &rep);
  EXPECT_EQ(c.citations.size(), 1u);
  EXPECT_EQ(rep.self_dropped, 1u);
  EXPECT_EQ(rep.duplicate_pairs, 1u);
  EXPECT_TRUE(c.citations.count({"A", "B"}));
}

TEST(Corpus, RoundTripThroughFile) {
  std::mt19937_64 rng(11);
  std::vector<PatentRecord> recs;
  for (int i = 0; i < 30; ++i) {
    PatentRecord r{"P" + std::to_string(i), "text \"quoted\" ünïcode " + std::to_string(rng() % 97), {}};
    for (int k = 0; k < 3; ++k) r.cited_ids.push_back("P" + std::to_string(rng() % 40));
    recs.push_back(r);
  }
  auto a = make_corpus(recs);
  auto p = fs::temp_directory_path() / "rasim_corpus_roundtrip.jsonl";
  write_corpus(a, p);
  auto b = ingest_corpus(p);
  EXPECT_EQ(a.citations, b.citations);
  ASSERT_EQ(a.size(), b.size());
  for (const auto& [id, rec] : a.patents) EXPECT_EQ(rec.abstract, b.patents.at(id).abstract);
}

TEST(Stats, SingleDocument) {
  auto s = corpus_stats(make_corpus({{"A", "one two three four five", {}}}));
  EXPECT_EQ(s.max, 5);
  EXPECT_EQ(s.min, 5);
  EXPECT_EQ(s.mean, 5);
  EXPECT_EQ(s.stddev, 0);
}

TEST(Stats, PopulationStddev) {
  auto s = corpus_stats(make_corpus({{"A", "a b", {}}, {"B", "a b c d", {}}}));
  EXPECT_DOUBLE_EQ(s.mean, 3.0);
  EXPECT_DOUBLE_EQ(s.stddev, 1.0);
}

TEST(Stats, MeanTimesCountIsTotal) {
  std::mt19937_64 rng(5);
  std::vector<PatentRecord> recs;
  std::size_t total = 0;
  for (int i = 0; i < 57; ++i) {
    std::string text;
    auto n = 1 + rng() % 40;
    total += n;
    for (std::size_t t = 0; t < n; ++t) text += "w ";
    recs.push_back({"D" + std::to_string(i), text, {}});
  }
  auto s = corpus_stats(make_corpus(recs));
  EXPECT_NEAR(s.mean * static_cast<double>(s.count), static_cast<double>(total), 1e-9 * total);
  EXPECT_LE(s.min, s.mean);
  EXPECT_LE(s.mean, s.max);
}

TEST(Stats, EmptyCorpusIsAnError) { EXPECT_THROW(corpus_stats(Corpus{}), DataError); }
