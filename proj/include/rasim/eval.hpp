#ifndef RASIM_EVAL_HPP
#define RASIM_EVAL_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "rasim/encoder.hpp"
#include "rasim/metrics.hpp"
#include "rasim/pairs.hpp"
#include "rasim/phrasegen.hpp"
#include "rasim/retrieval.hpp"
#include "rasim/training.hpp"
#include "rasim/universe.hpp"

namespace rasim {

struct EvalReport {
  double pearson = 0;
  double spearman = 0;
  std::optional<double> alignment;  // absent without positive pairs
  double uniformity = 0;
  std::size_t pair_count = 0;
};

struct AlignmentUniformity {
  double alignment = 0;
  double uniformity = 0;
};

using EmbeddingMap = std::map<std::string, Vec>;

namespace detail {

inline EmbeddingMap normalized(const EmbeddingMap& embeddings) {
  EmbeddingMap unit;
  for (const auto& [p, v] : embeddings) {
    double n = v.norm();
    unit.emplace(p, n > 0 ? Vec(v / n) : v);
  }
  return unit;
}

}  // namespace detail

/// log mean exp(-2 |x-y|^2) over all unordered pairs of distinct phrases,
/// on L2-normalized embeddings.
inline double uniformity_loss(const EmbeddingMap& embeddings) {
  if (embeddings.size() < 2) throw DataError("uniformity needs at least two phrases");
  auto unit = detail::normalized(embeddings);
  std::vector<const Vec*> vs;
  for (const auto& [p, v] : unit) vs.push_back(&v);
  double acc = 0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < vs.size(); ++i)
    for (std::size_t j = i + 1; j < vs.size(); ++j) {
      acc += std::exp(-2.0 * (*vs[i] - *vs[j]).squaredNorm());
      ++count;
    }
  return std::log(acc / static_cast<double>(count));
}

/// Mean squared distance of L2-normalized embeddings over pairs labeled
/// >= threshold (inclusive).
inline double alignment_loss(const EmbeddingMap& embeddings, const std::vector<PhrasePair>& pairs,
                             double threshold = 0.75) {
  auto unit = detail::normalized(embeddings);
  std::size_t positives = 0;
  double align = 0;
  for (const auto& pr : pairs) {
    if (pr.score < threshold) continue;
    auto a = unit.find(pr.a), b = unit.find(pr.b);
    if (a == unit.end() || b == unit.end()) throw DataError("pair phrase without embedding");
    align += (a->second - b->second).squaredNorm();
    ++positives;
  }
  if (positives == 0) throw DataError("alignment undefined: no pair labeled >= threshold");
  return align / static_cast<double>(positives);
}

inline AlignmentUniformity alignment_uniformity(const EmbeddingMap& embeddings,
                                                const std::vector<PhrasePair>& pairs,
                                                double threshold = 0.75) {
  if (embeddings.size() < 2) throw DataError("alignment/uniformity needs at least two phrases");
  return {alignment_loss(embeddings, pairs, threshold), uniformity_loss(embeddings)};
}

/// Scores pairs with cosine similarity of the given embeddings.
inline EvalReport evaluate_embeddings(const EmbeddingMap& embeddings,
                                      const std::vector<PhrasePair>& pairs,
                                      double threshold = 0.75) {
  if (pairs.empty()) throw DataError("no evaluation pairs");
  std::vector<double> pred, labels;
  for (const auto& p : pairs) {
    pred.push_back(infer_similarity(embeddings.at(p.a), embeddings.at(p.b)));
    labels.push_back(p.score);
  }
  auto c = correlations(pred, labels);
  EvalReport r;
  r.pearson = c.pearson;
  r.spearman = c.spearman;
  r.pair_count = pairs.size();
  bool any_positive = std::any_of(pairs.begin(), pairs.end(),
                                  [&](const PhrasePair& p) { return p.score >= threshold; });
  if (any_positive) r.alignment = alignment_loss(embeddings, pairs, threshold);
  if (embeddings.size() >= 2) r.uniformity = uniformity_loss(embeddings);
  return r;
}

/// Unique phrase texts of a pair list, in first-seen order.
inline std::vector<std::string> pair_vocabulary(const std::vector<PhrasePair>& pairs) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& p : pairs)
    for (const auto* s : {&p.a, &p.b})
      if (seen.insert(*s).second) out.push_back(*s);
  return out;
}

inline EmbeddingMap embed_all(const std::vector<std::string>& phrases,
                              const std::function<Vec(const std::string&)>& embed) {
  EmbeddingMap out;
  for (const auto& p : phrases)
    if (!out.count(p)) out.emplace(p, embed(p));
  return out;
}

/// Normalizes pair phrases the way the phrase inventory is normalized.
inline std::vector<PhrasePair> normalize_pairs(std::vector<PhrasePair> pairs, bool strip_plurals) {
  for (auto& p : pairs) {
    p.a = normalize_phrase(p.a, strip_plurals);
    p.b = normalize_phrase(p.b, strip_plurals);
  }
  return pairs;
}

/// Resolves (already normalized) pairs to universe phrase ids, adding phrase
/// nodes for texts outside the inventory.
inline std::vector<IndexedPair> index_pairs(Universe& universe, const InvertedIndex& index,
                                            const std::vector<PhrasePair>& pairs) {
  std::vector<IndexedPair> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs)
    out.push_back({universe.add_phrase(p.a, index), universe.add_phrase(p.b, index), p.score});
  return out;
}

/// phi for each phrase of `pairs` under a trained model.
inline EmbeddingMap model_embeddings(const Model& model, Universe& universe,
                                     const InvertedIndex& index,
                                     const std::vector<std::string>& phrases,
                                     const SampleConfig& sampling, std::uint64_t seed) {
  return embed_all(phrases, [&](const std::string& p) {
    return phrase_embedding(model, universe, universe.add_phrase(p, index), sampling, seed);
  });
}

inline EvalReport evaluate(const Model& model, Universe& universe, const InvertedIndex& index,
                           const std::vector<PhrasePair>& pairs, const SampleConfig& sampling,
                           std::uint64_t seed, double threshold = 0.75) {
  auto emb = model_embeddings(model, universe, index, pair_vocabulary(pairs), sampling, seed);
  return evaluate_embeddings(emb, pairs, threshold);
}

/// Encoder-only reference: cosine on f(u).
inline EvalReport evaluate_encoder_only(const TextEncoder& encoder,
                                        const std::vector<PhrasePair>& pairs,
                                        double threshold = 0.75) {
  auto emb = embed_all(pair_vocabulary(pairs),
                       [&](const std::string& p) { return encoder.encode(p).value; });
  return evaluate_embeddings(emb, pairs, threshold);
}

struct Neighbor {
  std::string phrase;
  double similarity = 0;
};

/// Candidates ranked by cosine to the query embedding, ties by text; the
/// query text itself is excluded.
inline std::vector<Neighbor> query_neighbors(const std::string& query, const Vec& query_vec,
                                             const EmbeddingMap& candidates,
                                             std::size_t top_n = 5) {
  std::vector<Neighbor> out;
  for (const auto& [p, v] : candidates)
    if (p != query) out.push_back({p, infer_similarity(query_vec, v)});
  std::sort(out.begin(), out.end(), [](const Neighbor& a, const Neighbor& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.phrase < b.phrase;
  });
  if (out.size() > top_n) out.resize(top_n);
  return out;
}

// ---------------------------------------------------------------------------
// Baselines

/// RetrieveAvg: w f(phrase) + (1-w) f(abstract of the top-1 BM25 patent).
/// Falls back to f(phrase) when nothing is retrieved.
class RetrieveAvg {
 public:
  RetrieveAvg(const TextEncoder& encoder, const InvertedIndex& index, const Corpus& corpus)
      : encoder_(encoder), index_(index), corpus_(corpus) {}

  Vec embed(const std::string& phrase, double w) const {
    Vec f = encoder_.encode(phrase).value;
    auto top = retrieve_topk(index_, phrase, 1);
    if (top.empty()) {
      spdlog::debug("RetrieveAvg: no retrieval for '{}'", phrase);
      return f;
    }
    Vec doc = encoder_.encode(corpus_.patents.at(top.front()).abstract).value;
    return w * f + (1.0 - w) * doc;
  }

  EmbeddingMap embed_all(const std::vector<std::string>& phrases, double w) const {
    return rasim::embed_all(phrases, [&](const std::string& p) { return embed(p, w); });
  }

  struct GridResult {
    double weight = 0;
    double spearman = 0;
    std::vector<std::pair<double, double>> curve;  // (w, validation spearman)
  };

  /// Grid {0.0, 0.1, ..., 1.0}; argmax validation Spearman, ties to smaller w.
  GridResult grid_search(const std::vector<PhrasePair>& validation) const {
    GridResult best;
    bool have = false;
    auto vocab = pair_vocabulary(validation);
    for (int i = 0; i <= 10; ++i) {
      double w = i / 10.0;
      auto r = evaluate_embeddings(embed_all(vocab, w), validation);
      best.curve.emplace_back(w, r.spearman);
      if (!have || r.spearman > best.spearman) {
        best.weight = w;
        best.spearman = r.spearman;
        have = true;
      }
    }
    return best;
  }

 private:
  const TextEncoder& encoder_;
  const InvertedIndex& index_;
  const Corpus& corpus_;
};

inline Vec retrieve_avg_baseline(const std::string& phrase, const TextEncoder& encoder,
                                 const InvertedIndex& index, const Corpus& corpus, double w) {
  return RetrieveAvg(encoder, index, corpus).embed(phrase, w);
}

/// Graph-Only: same pipeline, but h^0 of every node is a frozen seeded
/// Gaussian vector, so only the topology carries signal.
inline Model graph_only_model(std::size_t dim, std::size_t layers, std::uint64_t seed) {
  return {TextEncoder::random_fixed(dim, hash_combine(seed, fnv1a64("graph-only"))),
          GnnParams::init(dim, layers, hash_combine(seed, fnv1a64("gnn")))};
}

inline TrainResult graph_only_baseline(const Universe& universe, std::size_t dim,
                                       std::size_t layers, const TrainConfig& cfg,
                                       const std::vector<std::uint32_t>& train_phrases,
                                       const std::vector<IndexedPair>& validation = {}) {
  return train(universe, graph_only_model(dim, layers, cfg.seed), cfg, train_phrases, validation);
}

// ---------------------------------------------------------------------------
// Reports

inline nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json j{{"pearson", r.pearson},
                   {"spearman", r.spearman},
                   {"uniformity", r.uniformity},
                   {"pair_count", r.pair_count}};
  j["alignment"] = r.alignment ? nlohmann::json(*r.alignment) : nlohmann::json(nullptr);
  return j;
}

inline EvalReport mean_report(const std::vector<EvalReport>& rows) {
  if (rows.empty()) throw std::invalid_argument("mean of no reports");
  EvalReport m;
  double n = static_cast<double>(rows.size());
  bool all_align = true;
  double align = 0;
  for (const auto& r : rows) {
    m.pearson += r.pearson / n;
    m.spearman += r.spearman / n;
    m.uniformity += r.uniformity / n;
    if (r.alignment) align += *r.alignment / n;
    else all_align = false;
  }
  if (all_align) m.alignment = align;
  m.pair_count = rows.front().pair_count;
  return m;
}

inline std::string format_report_row(const std::string& label, const EvalReport& r) {
  return fmt::format("{:<10} pearson={:.6f} spearman={:.6f} alignment={} uniformity={:.6f} pairs={}",
                     label, r.pearson, r.spearman,
                     r.alignment ? fmt::format("{:.6f}", *r.alignment) : std::string("n/a"),
                     r.uniformity, r.pair_count);
}

}  // namespace rasim

#endif  // RASIM_EVAL_HPP
