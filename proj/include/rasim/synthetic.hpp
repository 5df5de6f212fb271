#ifndef RASIM_SYNTHETIC_HPP
#define RASIM_SYNTHETIC_HPP

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "rasim/corpus.hpp"
#include "rasim/pairs.hpp"
#include "rasim/phrasegen.hpp"

namespace rasim::synthetic {

/// Clustered toy corpus: each cluster owns a vocabulary and a bank of
/// two-word phrases; documents are built from their cluster's phrases and
/// cite mostly inside their cluster. Pair labels are 1 for same-cluster
/// phrases and 0 otherwise.
struct Spec {
  std::size_t clusters = 8;
  std::size_t docs = 400;
  std::size_t phrases_per_cluster = 25;
  std::size_t words_per_cluster = 40;
  std::size_t shared_words = 40;
  std::size_t citations_per_doc = 3;
  double intra_citation = 0.9;
  double foreign_phrase_rate = 0.3;
  std::size_t min_fillers = 4;
  std::size_t max_fillers = 8;
  double shared_filler_rate = 0.6;
  std::size_t test_pairs = 160;
  std::size_t validation_pairs = 160;
  std::size_t train_pairs = 320;
  std::uint64_t seed = 7;
};

struct Fixture {
  Corpus corpus;
  std::vector<std::vector<std::string>> phrase_bank;  // [cluster][i]
  std::vector<PhrasePair> test, validation, train;

  std::size_t cluster_of(const std::string& phrase) const {
    for (std::size_t c = 0; c < phrase_bank.size(); ++c)
      if (std::find(phrase_bank[c].begin(), phrase_bank[c].end(), phrase) != phrase_bank[c].end())
        return c;
    return phrase_bank.size();
  }
};

namespace detail {

inline std::vector<std::string> make_words(std::size_t n, std::mt19937_64& rng,
                                           std::set<std::string>& used) {
  static const char* onsets[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r",
                                 "s", "t", "v", "z", "br", "tr", "pl", "st", "gr", "kl"};
  static const char* vowels[] = {"a", "e", "i", "o", "u", "ai", "eo", "ou"};
  std::uniform_int_distribution<int> on(0, 19), vo(0, 7), syl(2, 3);
  std::vector<std::string> out;
  while (out.size() < n) {
    std::string w;
    for (int s = syl(rng); s > 0; --s) {
      w += onsets[on(rng)];
      w += vowels[vo(rng)];
    }
    w += "n";
    if (default_stopwords().count(w) || !used.insert(w).second) continue;
    out.push_back(w);
  }
  return out;
}

}  // namespace detail

inline Fixture generate(const Spec& spec) {
  std::mt19937_64 rng(spec.seed);
  Fixture fx;
  std::set<std::string> used;
  auto shared = detail::make_words(spec.shared_words, rng, used);
  std::vector<std::vector<std::string>> vocab;
  for (std::size_t c = 0; c < spec.clusters; ++c)
    vocab.push_back(detail::make_words(spec.words_per_cluster, rng, used));

  // Phrase banks: two distinct cluster words, occasionally a shared word first.
  std::bernoulli_distribution use_shared(0.2);
  for (std::size_t c = 0; c < spec.clusters; ++c) {
    std::set<std::string> bank;
    std::vector<std::string> ordered;
    std::uniform_int_distribution<std::size_t> pick(0, vocab[c].size() - 1), pick_s(0, shared.size() - 1);
    while (ordered.size() < spec.phrases_per_cluster) {
      std::string a = use_shared(rng) ? shared[pick_s(rng)] : vocab[c][pick(rng)];
      std::string b = vocab[c][pick(rng)];
      if (a == b) continue;
      auto p = a + " " + b;
      if (bank.insert(p).second) ordered.push_back(p);
    }
    fx.phrase_bank.push_back(ordered);
  }

  static const char* joiners[] = {"of", "and", "for", "with", "in", "to", "by", "on"};
  std::uniform_int_distribution<int> pick_join(0, 7);
  std::bernoulli_distribution foreign(spec.foreign_phrase_rate);
  std::bernoulli_distribution shared_filler(spec.shared_filler_rate);
  std::uniform_int_distribution<int> extra_count(1, 3);
  std::uniform_int_distribution<int> filler_count(static_cast<int>(spec.min_fillers),
                                                                   static_cast<int>(spec.max_fillers));

  std::vector<PatentRecord> records;
  std::vector<std::size_t> doc_cluster;
  for (std::size_t d = 0; d < spec.docs; ++d) {
    std::size_t c = d % spec.clusters;
    std::size_t i = d / spec.clusters;
    const auto& bank = fx.phrase_bank[c];
    std::vector<std::string> clauses;
    std::set<std::string> phrase_words;
    auto add_phrase = [&](const std::string& p) {
      clauses.push_back(p);
      for (auto& w : tokenize(p)) phrase_words.insert(w);
    };
    for (std::size_t t = 0; t < 3; ++t) add_phrase(bank[(3 * i + t) % bank.size()]);
    for (int e = extra_count(rng); e > 0; --e) {
      std::size_t oc = foreign(rng) ? (c + 1 + rng() % (spec.clusters - 1)) % spec.clusters : c;
      const auto& ob = fx.phrase_bank[oc];
      add_phrase(ob[rng() % ob.size()]);
    }
    // Single-word fillers score below every two-word phrase.
    for (int f = filler_count(rng); f > 0; --f) {
      for (int attempt = 0; attempt < 20; ++attempt) {
        const auto& pool = shared_filler(rng) ? shared : vocab[c];
        const auto& w = pool[rng() % pool.size()];
        if (!phrase_words.count(w)) {
          clauses.push_back(w);
          break;
        }
      }
    }
    std::string text;
    for (std::size_t k = 0; k < clauses.size(); ++k) {
      if (k) text += (k % 3 == 0) ? ". " : std::string(" ") + joiners[pick_join(rng)] + " ";
      text += clauses[k];
    }
    text += ".";
    text[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(text[0])));
    char id[16];
    std::snprintf(id, sizeof(id), "P%05zu", d);
    records.push_back({id, text, {}});
    doc_cluster.push_back(c);
  }
  std::bernoulli_distribution intra(spec.intra_citation);
  for (std::size_t d = 0; d < spec.docs; ++d) {
    for (std::size_t k = 0; k < spec.citations_per_doc; ++k) {
      std::size_t target = d;
      bool same = intra(rng);
      for (int attempt = 0; attempt < 50 && (target == d || (doc_cluster[target] == doc_cluster[d]) != same);
           ++attempt)
        target = rng() % spec.docs;
      if (target != d) records[d].cited_ids.push_back(records[target].id);
    }
  }
  fx.corpus = make_corpus(std::move(records));

  std::set<std::pair<std::string, std::string>> taken;
  auto draw_pairs = [&](std::size_t n) {
    std::vector<PhrasePair> out;
    while (out.size() < n) {
      bool positive = out.size() % 2 == 0;
      std::size_t c1 = rng() % spec.clusters;
      std::size_t c2 = positive ? c1 : (c1 + 1 + rng() % (spec.clusters - 1)) % spec.clusters;
      const auto& a = fx.phrase_bank[c1][rng() % spec.phrases_per_cluster];
      const auto& b = fx.phrase_bank[c2][rng() % spec.phrases_per_cluster];
      if (a == b) continue;
      auto key = std::minmax(a, b);
      if (!taken.emplace(key.first, key.second).second) continue;
      out.push_back({a, b, positive ? 1.0 : 0.0});
    }
    return out;
  };
  fx.test = draw_pairs(spec.test_pairs);
  fx.validation = draw_pairs(spec.validation_pairs);
  fx.train = draw_pairs(spec.train_pairs);
  return fx;
}

}  // namespace rasim::synthetic

#endif  // RASIM_SYNTHETIC_HPP
