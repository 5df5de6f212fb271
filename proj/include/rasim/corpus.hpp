#ifndef RASIM_CORPUS_HPP
#define RASIM_CORPUS_HPP

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "rasim/errors.hpp"
#include "rasim/text.hpp"

namespace rasim {

struct PatentRecord {
  std::string id;
  std::string abstract;
  std::vector<std::string> cited_ids;

  bool operator==(const PatentRecord&) const = default;
};

/// Immutable after ingest. Patents are keyed (and therefore ordered) by id;
/// that ordering is the dense patent index used by every downstream module.
struct Corpus {
  std::map<std::string, PatentRecord> patents;
  std::set<std::pair<std::string, std::string>> citations;  // (citing, cited)

  std::size_t size() const { return patents.size(); }
  bool empty() const { return patents.empty(); }
  bool operator==(const Corpus&) const = default;
};

struct IngestReport {
  std::size_t dangling_dropped = 0;
  std::size_t self_dropped = 0;
  std::size_t duplicate_pairs = 0;
};

struct TokenStats {
  double max = 0;
  double min = 0;
  double mean = 0;
  double stddev = 0;
  std::size_t count = 0;
  std::size_t total = 0;
};

/// Builds a corpus from already-parsed records, applying the citation rules:
/// targets outside the corpus and self-citations are dropped, ordered pairs
/// are deduplicated. Throws DataError on duplicate or empty ids and blank text.
inline Corpus make_corpus(std::vector<PatentRecord> records,
                          IngestReport* report = nullptr) {
  Corpus corpus;
  for (auto& rec : records) {
    if (rec.id.empty()) throw DataError("patent record with empty id");
    if (trim(rec.abstract).empty())
      throw DataError("patent " + rec.id + " has an empty abstract");
    std::string id = rec.id;
    if (!corpus.patents.emplace(id, std::move(rec)).second)
      throw DataError("duplicate patent id: " + id);
  }
  IngestReport local;
  for (const auto& [id, rec] : corpus.patents) {
    for (const auto& target : rec.cited_ids) {
      if (target == id) {
        ++local.self_dropped;
      } else if (!corpus.patents.count(target)) {
        ++local.dangling_dropped;
      } else if (!corpus.citations.emplace(id, target).second) {
        ++local.duplicate_pairs;
      }
    }
  }
  if (local.dangling_dropped || local.self_dropped)
    spdlog::warn("dropped {} dangling and {} self citations",
                 local.dangling_dropped, local.self_dropped);
  if (report) *report = local;
  return corpus;
}

inline PatentRecord parse_patent_line(const std::string& line,
                                      std::size_t line_no) {
  auto fail = [&](const std::string& why) {
    return DataError("corpus line " + std::to_string(line_no) + ": " + why);
  };
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw fail(std::string("malformed JSON (") + e.what() + ")");
  }
  if (!j.is_object()) throw fail("record is not an object");
  if (!j.contains("id") || !j["id"].is_string()) throw fail("missing string 'id'");
  if (!j.contains("abstract") || !j["abstract"].is_string())
    throw fail("missing string 'abstract'");
  PatentRecord rec;
  rec.id = j["id"].get<std::string>();
  rec.abstract = j["abstract"].get<std::string>();
  if (j.contains("citations")) {
    if (!j["citations"].is_array()) throw fail("'citations' is not an array");
    for (const auto& c : j["citations"]) {
      if (!c.is_string()) throw fail("citation entry is not a string");
      rec.cited_ids.push_back(c.get<std::string>());
    }
  }
  if (rec.id.empty()) throw fail("empty id");
  if (trim(rec.abstract).empty()) throw fail("empty abstract");
  return rec;
}

/// Reads line-delimited JSON records `{"id", "abstract", "citations"}`.
inline Corpus ingest_corpus(const std::filesystem::path& path,
                            IngestReport* report = nullptr) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file: " + path.string());
  std::vector<PatentRecord> records;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto rec = parse_patent_line(line, line_no);
    if (!seen.insert(rec.id).second)
      throw DataError("corpus line " + std::to_string(line_no) +
                      ": duplicate patent id " + rec.id);
    records.push_back(std::move(rec));
  }
  if (in.bad()) throw DataError("I/O error reading " + path.string());
  if (records.empty()) throw DataError("empty corpus");
  return make_corpus(std::move(records), report);
}

/// Writes the retained corpus: each record lists only its retained citations.
inline void write_corpus(const Corpus& corpus, std::ostream& out) {
  std::map<std::string, std::vector<std::string>> cited;
  for (const auto& [src, dst] : corpus.citations) cited[src].push_back(dst);
  for (const auto& [id, rec] : corpus.patents) {
    nlohmann::json j;
    j["id"] = id;
    j["abstract"] = rec.abstract;
    j["citations"] = cited.count(id) ? cited[id] : std::vector<std::string>{};
    out << j.dump() << '\n';
  }
}

inline void write_corpus(const Corpus& corpus,
                         const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write corpus file: " + path.string());
  write_corpus(corpus, out);
}

/// Max/min/mean/population-stddev of a list of counts.
inline TokenStats count_stats(const std::vector<std::size_t>& counts) {
  if (counts.empty()) throw DataError("empty corpus");
  TokenStats s;
  s.count = counts.size();
  s.min = s.max = static_cast<double>(counts.front());
  for (auto c : counts) {
    s.total += c;
    s.min = std::min(s.min, static_cast<double>(c));
    s.max = std::max(s.max, static_cast<double>(c));
  }
  s.mean = static_cast<double>(s.total) / static_cast<double>(s.count);
  double ss = 0;
  for (auto c : counts) {
    double d = static_cast<double>(c) - s.mean;
    ss += d * d;
  }
  s.stddev = std::sqrt(ss / static_cast<double>(s.count));
  return s;
}

inline TokenStats corpus_stats(const Corpus& corpus) {
  if (corpus.empty()) throw DataError("empty corpus");
  std::vector<std::size_t> counts;
  counts.reserve(corpus.size());
  for (const auto& [id, rec] : corpus.patents)
    counts.push_back(tokenize(rec.abstract).size());
  return count_stats(counts);
}

inline nlohmann::json to_json(const TokenStats& s) {
  return {{"max", s.max},     {"min", s.min},       {"mean", s.mean},
          {"stddev", s.stddev}, {"count", s.count}, {"total", s.total}};
}

}  // namespace rasim

#endif  // RASIM_CORPUS_HPP
