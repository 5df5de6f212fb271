#ifndef RASIM_RETRIEVAL_HPP
#define RASIM_RETRIEVAL_HPP

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "rasim/corpus.hpp"
#include "rasim/errors.hpp"
#include "rasim/text.hpp"

namespace rasim {

struct Posting {
  std::uint32_t doc = 0;  // dense index into InvertedIndex::doc_ids
  std::uint32_t tf = 0;
  bool operator==(const Posting&) const = default;
};

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

struct ScoredDoc {
  std::uint32_t doc = 0;
  double score = 0;
};

/// BM25 inverted index over document abstracts. Doc indices follow ascending
/// doc id order, so every postings list sorted by index is sorted by id.
class InvertedIndex {
 public:
  InvertedIndex() = default;

  static InvertedIndex build(const Corpus& corpus, Bm25Params params = {}) {
    if (corpus.empty()) throw DataError("cannot index an empty corpus");
    InvertedIndex idx;
    idx.params_ = params;
    std::map<std::string, std::vector<Posting>> postings;
    std::uint64_t total = 0;
    for (const auto& [id, rec] : corpus.patents) {
      auto doc = static_cast<std::uint32_t>(idx.doc_ids_.size());
      idx.doc_ids_.push_back(id);
      auto toks = tokenize(rec.abstract);
      idx.doc_len_.push_back(static_cast<std::uint32_t>(toks.size()));
      total += toks.size();
      std::map<std::string, std::uint32_t> tf;
      for (auto& t : toks) ++tf[t];
      for (auto& [t, n] : tf) postings[t].push_back({doc, n});
    }
    idx.postings_.reserve(postings.size());
    for (auto& [t, list] : postings) idx.postings_.emplace(t, std::move(list));
    idx.avg_doc_len_ =
        static_cast<double>(total) / static_cast<double>(idx.doc_ids_.size());
    idx.rebuild_lookup();
    return idx;
  }

  std::size_t doc_count() const { return doc_ids_.size(); }
  std::size_t term_count() const { return postings_.size(); }
  double avg_doc_len() const { return avg_doc_len_; }
  const Bm25Params& params() const { return params_; }
  const std::vector<std::string>& doc_ids() const { return doc_ids_; }
  const std::vector<std::uint32_t>& doc_lengths() const { return doc_len_; }
  const std::unordered_map<std::string, std::vector<Posting>>& postings() const {
    return postings_;
  }

  std::uint32_t doc_index(const std::string& id) const {
    auto it = id_lookup_.find(id);
    if (it == id_lookup_.end()) throw DataError("unknown document id: " + id);
    return it->second;
  }

  double idf(std::size_t n_t) const {
    double n = static_cast<double>(doc_ids_.size());
    double nt = static_cast<double>(n_t);
    return std::log(1.0 + (n - nt + 0.5) / (nt + 0.5));
  }

  /// Contribution of one query token with term frequency `tf` in `doc`.
  double term_weight(std::size_t n_t, std::uint32_t tf, std::uint32_t doc) const {
    double f = static_cast<double>(tf);
    double norm = params_.k1 * (1.0 - params_.b +
                                params_.b * static_cast<double>(doc_len_[doc]) /
                                    avg_doc_len_);
    return idf(n_t) * f * (params_.k1 + 1.0) / (f + norm);
  }

  double score(const std::vector<std::string>& query, std::uint32_t doc) const {
    double s = 0;
    for (const auto& t : query) {
      auto it = postings_.find(t);
      if (it == postings_.end()) continue;
      const auto& list = it->second;
      auto p = std::lower_bound(
          list.begin(), list.end(), doc,
          [](const Posting& a, std::uint32_t d) { return a.doc < d; });
      if (p == list.end() || p->doc != doc) continue;
      s += term_weight(list.size(), p->tf, doc);
    }
    return s;
  }

  double score(const std::vector<std::string>& query, const std::string& doc_id) const {
    return score(query, doc_index(doc_id));
  }

  /// Documents with positive score, best first; ties by ascending doc id.
  std::vector<ScoredDoc> search(const std::vector<std::string>& query,
                                std::size_t k) const {
    if (k == 0) throw std::invalid_argument("retrieve_topk: k must be >= 1");
    std::unordered_map<std::uint32_t, double> acc;
    for (const auto& t : query) {
      auto it = postings_.find(t);
      if (it == postings_.end()) continue;
      for (const auto& p : it->second)
        acc[p.doc] += term_weight(it->second.size(), p.tf, p.doc);
    }
    std::vector<ScoredDoc> hits;
    hits.reserve(acc.size());
    for (auto [doc, s] : acc)
      if (s > 0) hits.push_back({doc, s});
    auto better = [](const ScoredDoc& a, const ScoredDoc& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.doc < b.doc;
    };
    if (hits.size() > k) {
      std::partial_sort(hits.begin(), hits.begin() + static_cast<long>(k),
                        hits.end(), better);
      hits.resize(k);
    } else {
      std::sort(hits.begin(), hits.end(), better);
    }
    return hits;
  }

  void save(std::ostream& out) const;
  void save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write index file: " + path.string());
    save(out);
  }
  static InvertedIndex load(std::istream& in);
  static InvertedIndex load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open index file: " + path.string());
    return load(in);
  }

  bool operator==(const InvertedIndex& o) const {
    return doc_ids_ == o.doc_ids_ && doc_len_ == o.doc_len_ &&
           postings_ == o.postings_ && avg_doc_len_ == o.avg_doc_len_ &&
           params_.k1 == o.params_.k1 && params_.b == o.params_.b;
  }

 private:
  void rebuild_lookup() {
    id_lookup_.clear();
    for (std::uint32_t i = 0; i < doc_ids_.size(); ++i) id_lookup_[doc_ids_[i]] = i;
  }

  std::vector<std::string> doc_ids_;
  std::vector<std::uint32_t> doc_len_;
  std::unordered_map<std::string, std::vector<Posting>> postings_;
  std::unordered_map<std::string, std::uint32_t> id_lookup_;
  double avg_doc_len_ = 0;
  Bm25Params params_;
};

inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
  double v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw DataError("bad number: " + std::string(s));
  return v;
}

constexpr const char* kIndexMagic = "rasim-bm25 v1";

// Line format: magic; "params k1 b avg"; "docs N"; N lines "id<TAB>len";
// "terms T"; T lines "token<TAB>doc:tf doc:tf ..." in token order.
inline void InvertedIndex::save(std::ostream& out) const {
  out << kIndexMagic << '\n';
  out << "params " << format_double(params_.k1) << ' ' << format_double(params_.b)
      << ' ' << format_double(avg_doc_len_) << '\n';
  out << "docs " << doc_ids_.size() << '\n';
  for (std::size_t i = 0; i < doc_ids_.size(); ++i) {
    if (doc_ids_[i].find_first_of("\t\n") != std::string::npos)
      throw DataError("doc id contains tab/newline: " + doc_ids_[i]);
    out << doc_ids_[i] << '\t' << doc_len_[i] << '\n';
  }
  std::map<std::string, const std::vector<Posting>*> sorted;
  for (const auto& [t, list] : postings_) sorted.emplace(t, &list);
  out << "terms " << sorted.size() << '\n';
  for (const auto& [t, list] : sorted) {
    out << t << '\t';
    for (std::size_t i = 0; i < list->size(); ++i) {
      if (i) out << ' ';
      out << (*list)[i].doc << ':' << (*list)[i].tf;
    }
    out << '\n';
  }
}

inline InvertedIndex InvertedIndex::load(std::istream& in) {
  auto fail = [](const std::string& why) {
    return DataError("index file: " + why);
  };
  std::string line;
  if (!std::getline(in, line) || line != kIndexMagic)
    throw fail("missing or unsupported version header");
  InvertedIndex idx;
  {
    if (!std::getline(in, line)) throw fail("truncated");
    std::istringstream ls(line);
    std::string tag, k1, b, avg;
    ls >> tag >> k1 >> b >> avg;
    if (tag != "params") throw fail("expected params line");
    idx.params_.k1 = parse_double(k1);
    idx.params_.b = parse_double(b);
    idx.avg_doc_len_ = parse_double(avg);
  }
  std::size_t n = 0;
  {
    if (!std::getline(in, line) || line.rfind("docs ", 0) != 0) throw fail("expected docs line");
    n = std::stoull(line.substr(5));
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::getline(in, line)) throw fail("truncated doc table");
    auto tab = line.find('\t');
    if (tab == std::string::npos) throw fail("bad doc line");
    idx.doc_ids_.push_back(line.substr(0, tab));
    idx.doc_len_.push_back(static_cast<std::uint32_t>(std::stoul(line.substr(tab + 1))));
  }
  std::size_t terms = 0;
  if (!std::getline(in, line) || line.rfind("terms ", 0) != 0) throw fail("expected terms line");
  terms = std::stoull(line.substr(6));
  for (std::size_t i = 0; i < terms; ++i) {
    if (!std::getline(in, line)) throw fail("truncated postings");
    auto tab = line.find('\t');
    if (tab == std::string::npos) throw fail("bad postings line");
    std::vector<Posting> list;
    std::istringstream ls(line.substr(tab + 1));
    std::string item;
    while (ls >> item) {
      auto colon = item.find(':');
      if (colon == std::string::npos) throw fail("bad posting " + item);
      Posting p{static_cast<std::uint32_t>(std::stoul(item.substr(0, colon))),
                static_cast<std::uint32_t>(std::stoul(item.substr(colon + 1)))};
      if (p.doc >= n) throw fail("posting references unknown doc");
      list.push_back(p);
    }
    idx.postings_.emplace(line.substr(0, tab), std::move(list));
  }
  idx.rebuild_lookup();
  return idx;
}

inline InvertedIndex build_index(const Corpus& corpus, Bm25Params params = {}) {
  return InvertedIndex::build(corpus, params);
}

inline double bm25_score(const InvertedIndex& index,
                         const std::vector<std::string>& query_tokens,
                         const std::string& doc_id) {
  return index.score(query_tokens, doc_id);
}

/// Top-k doc ids for a phrase query (query = tokenize(phrase)).
inline std::vector<std::string> retrieve_topk(const InvertedIndex& index,
                                              std::string_view phrase,
                                              std::size_t k = 5) {
  std::vector<std::string> out;
  for (const auto& hit : index.search(tokenize(phrase), k))
    out.push_back(index.doc_ids()[hit.doc]);
  return out;
}

}  // namespace rasim

#endif  // RASIM_RETRIEVAL_HPP
