#ifndef RASIM_PHRASEGEN_HPP
#define RASIM_PHRASEGEN_HPP

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <spdlog/spdlog.h>

#include "rasim/corpus.hpp"
#include "rasim/errors.hpp"
#include "rasim/text.hpp"

namespace rasim {

using StopwordSet = std::set<std::string>;

/// Built-in English stopword list. Its fingerprint is stopword_hash().
inline const StopwordSet& default_stopwords() {
  static const StopwordSet words = {
      "a",       "about",   "above",   "across",  "after",   "again",
      "against", "all",     "almost",  "along",   "also",    "although",
      "among",   "an",      "and",     "another", "any",     "are",
      "as",      "at",      "be",      "been",    "before",  "being",
      "below",   "between", "both",    "but",     "by",      "can",
      "could",   "did",     "do",      "does",    "during",  "each",
      "either",  "for",     "from",    "further", "had",     "has",
      "have",    "having",  "he",      "her",     "here",    "his",
      "how",     "however", "i",       "if",      "in",      "into",
      "is",      "it",      "its",     "itself",  "may",     "more",
      "most",    "must",    "no",      "nor",     "not",     "of",
      "off",     "on",      "once",    "one",     "only",    "or",
      "other",   "our",     "out",     "over",    "own",     "said",
      "same",    "she",     "should",  "so",      "some",    "such",
      "than",    "that",    "the",     "their",   "them",    "then",
      "there",   "thereby", "therein", "these",   "they",    "this",
      "those",   "through", "thus",    "to",      "under",   "until",
      "up",      "upon",    "very",    "via",     "was",     "we",
      "were",    "what",    "when",    "where",   "whereby", "wherein",
      "which",   "while",   "who",     "whom",    "why",     "will",
      "with",    "within",  "without", "would",   "you",     "your"};
  return words;
}

inline std::uint64_t stopword_hash(const StopwordSet& words) {
  std::uint64_t h = fnv1a64("stopwords");
  for (const auto& w : words) {
    h = fnv1a64(w, h);
    h = fnv1a64("\n", h);
  }
  return h;
}

/// One word per line; blank lines and lines starting with '#' ignored.
inline StopwordSet load_stopwords(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open stopword file: " + path.string());
  StopwordSet words;
  std::string line;
  while (std::getline(in, line)) {
    auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    for (auto& tok : tokenize(t)) words.insert(tok);
  }
  return words;
}

struct PhraseCandidate {
  std::string text;
  double rake_score = 0;
  std::string source_id;
};

struct RakeOptions {
  std::size_t max_words = 6;
};

namespace detail {

/// Phrase boundaries: any non-alphanumeric, non-whitespace character except
/// intra-word joiners (hyphen, apostrophes, slash).
inline bool is_phrase_delimiter(char32_t c) {
  if (is_alnum(c)) return false;
  switch (c) {
    case U' ': case U'\t': case U'\n': case U'\r': case U'\f': case U'\v':
    case U'-': case U'\'': case U'/': case 0x2019: case 0x2010: case 0x2011:
    case 0xA0:
      return false;
    default:
      return true;
  }
}

inline std::vector<std::string_view> split_fragments(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0, pos = 0;
  while (pos < text.size()) {
    std::size_t here = pos;
    char32_t cp = utf8::decode(text, pos);
    if (is_phrase_delimiter(cp)) {
      if (here > start) out.push_back(text.substr(start, here - start));
      start = pos;
    }
  }
  if (start < text.size()) out.push_back(text.substr(start));
  return out;
}

}  // namespace detail

/// Candidate phrases: maximal runs of non-stopword tokens inside a fragment,
/// in document order (duplicates kept). Runs longer than `max_words` dropped.
inline std::vector<std::vector<std::string>> rake_candidates(
    std::string_view text, const StopwordSet& stopwords,
    const RakeOptions& opts = {}) {
  std::vector<std::vector<std::string>> runs;
  for (auto frag : detail::split_fragments(text)) {
    std::vector<std::string> run;
    auto flush = [&] {
      if (!run.empty() && run.size() <= opts.max_words) runs.push_back(run);
      run.clear();
    };
    for (auto& tok : tokenize(frag)) {
      if (stopwords.count(tok)) {
        flush();
      } else {
        run.push_back(std::move(tok));
      }
    }
    flush();
  }
  return runs;
}

/// Classic RAKE over a single document. Word score is degree/frequency on the
/// phrase co-occurrence graph; phrase score is the sum of its word scores.
/// Output is deduplicated by phrase text, sorted by score descending, then by
/// first occurrence, then lexicographically.
inline std::vector<PhraseCandidate> rake_extract(std::string_view text,
                                                 const StopwordSet& stopwords,
                                                 std::size_t top_m,
                                                 const RakeOptions& opts = {}) {
  if (top_m == 0) throw std::invalid_argument("rake_extract: top_m must be >= 1");
  auto runs = rake_candidates(text, stopwords, opts);

  std::unordered_map<std::string, double> freq, degree;
  for (const auto& run : runs) {
    for (const auto& w : run) {
      freq[w] += 1;
      degree[w] += static_cast<double>(run.size());
    }
  }

  struct Scored {
    std::string text;
    double score;
    std::size_t first;
  };
  std::vector<Scored> scored;
  std::unordered_map<std::string, std::size_t> seen;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    auto phrase = join(runs[i]);
    if (seen.count(phrase)) continue;
    seen.emplace(phrase, i);
    double s = 0;
    for (const auto& w : runs[i]) s += degree[w] / freq[w];
    scored.push_back({std::move(phrase), s, i});
  }
  std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.first != b.first) return a.first < b.first;
    return a.text < b.text;
  });
  if (scored.size() > top_m) scored.resize(top_m);

  std::vector<PhraseCandidate> out;
  out.reserve(scored.size());
  for (auto& s : scored) out.push_back({std::move(s.text), s.score, {}});
  return out;
}

/// Lowercases and collapses whitespace. With `strip_plurals`, each token ending
/// in "ies" becomes "...y" and tokens of length >= 4 lose a trailing "s"
/// (except "ss" endings).
inline std::string normalize_phrase(std::string_view text,
                                    bool strip_plurals = true) {
  std::vector<std::string> words;
  std::string cur;
  std::size_t pos = 0;
  auto flush = [&] {
    if (!cur.empty()) words.push_back(std::move(cur));
    cur.clear();
  };
  while (pos < text.size()) {
    char32_t cp = utf8::decode(text, pos);
    if (cp == U' ' || cp == U'\t' || cp == U'\n' || cp == U'\r' ||
        cp == U'\f' || cp == U'\v') {
      flush();
    } else {
      utf8::encode(to_lower(cp), cur);
    }
  }
  flush();
  if (strip_plurals) {
    for (auto& w : words) {
      if (w.size() >= 4 && w.ends_with("ies")) {
        w.replace(w.size() - 3, 3, "y");
      } else if (w.size() >= 4 && w.ends_with('s') && !w.ends_with("ss")) {
        w.pop_back();
      }
    }
  }
  return join(words);
}

/// Phrase inventory: normalized text -> number of documents it was extracted
/// from. std::map keeps the lexicographic index order.
struct PhraseSet {
  std::map<std::string, std::size_t> phrases;

  std::size_t size() const { return phrases.size(); }
  bool empty() const { return phrases.empty(); }
  std::vector<std::string> texts() const {
    std::vector<std::string> out;
    out.reserve(phrases.size());
    for (const auto& [t, f] : phrases) out.push_back(t);
    return out;
  }
  bool operator==(const PhraseSet&) const = default;
};

struct PhraseSetOptions {
  std::size_t top_m = 3;
  std::size_t min_freq = 25;
  bool normalize = false;
  RakeOptions rake{};
};

inline bool is_trivial_phrase(std::string_view phrase) {
  auto toks = tokenize(phrase);
  if (toks.empty()) return true;
  bool all_digits = std::all_of(toks.begin(), toks.end(), [](const auto& t) {
    return std::all_of(t.begin(), t.end(),
                       [](char c) { return c >= '0' && c <= '9'; });
  });
  if (all_digits) return true;
  if (toks.size() == 1) {
    std::size_t pos = 0;
    utf8::decode(toks[0], pos);
    if (pos == toks[0].size()) return true;  // single character
  }
  return false;
}

inline PhraseSet build_phrase_set(const Corpus& corpus,
                                  const StopwordSet& stopwords,
                                  const PhraseSetOptions& opts = {}) {
  if (corpus.empty()) throw DataError("empty corpus");
  std::map<std::string, std::size_t> counts;
  for (const auto& [id, rec] : corpus.patents) {
    std::set<std::string> in_doc;
    for (auto& cand : rake_extract(rec.abstract, stopwords, opts.top_m, opts.rake))
      in_doc.insert(normalize_phrase(cand.text, opts.normalize));
    for (const auto& p : in_doc) ++counts[p];
  }
  PhraseSet set;
  for (auto& [text, freq] : counts) {
    if (freq < opts.min_freq || is_trivial_phrase(text)) continue;
    set.phrases.emplace(text, freq);
  }
  if (set.empty()) spdlog::warn("phrase set is empty after filtering");
  return set;
}

inline void write_phrase_set(const PhraseSet& set, std::ostream& out) {
  for (const auto& [text, freq] : set.phrases) out << text << '\t' << freq << '\n';
}

inline void write_phrase_set(const PhraseSet& set,
                             const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write phrase file: " + path.string());
  write_phrase_set(set, out);
}

inline PhraseSet read_phrase_set(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open phrase file: " + path.string());
  PhraseSet set;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto tab = line.rfind('\t');
    if (tab == std::string::npos || tab == 0)
      throw DataError("phrase file line " + std::to_string(line_no) +
                      ": expected phrase<TAB>frequency");
    std::size_t freq = 0;
    try {
      freq = std::stoull(line.substr(tab + 1));
    } catch (const std::exception&) {
      throw DataError("phrase file line " + std::to_string(line_no) +
                      ": bad frequency");
    }
    if (!set.phrases.emplace(line.substr(0, tab), freq).second)
      throw DataError("phrase file line " + std::to_string(line_no) +
                      ": duplicate phrase");
  }
  return set;
}

}  // namespace rasim

#endif  // RASIM_PHRASEGEN_HPP
