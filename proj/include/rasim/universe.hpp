#ifndef RASIM_UNIVERSE_HPP
#define RASIM_UNIVERSE_HPP

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <spdlog/spdlog.h>

#include "rasim/corpus.hpp"
#include "rasim/errors.hpp"
#include "rasim/phrasegen.hpp"
#include "rasim/retrieval.hpp"

namespace rasim {

enum class NodeKind : std::uint8_t { Phrase = 0, Patent = 1 };

/// A node of the patent-phrase universe. Phrases order before patents.
struct NodeRef {
  NodeKind kind = NodeKind::Phrase;
  std::uint32_t id = 0;

  auto operator<=>(const NodeRef&) const = default;
  bool is_phrase() const { return kind == NodeKind::Phrase; }
  std::uint64_t key() const {
    return (static_cast<std::uint64_t>(kind) << 32) | id;
  }
};

inline NodeRef phrase_node(std::uint32_t id) { return {NodeKind::Phrase, id}; }
inline NodeRef patent_node(std::uint32_t id) { return {NodeKind::Patent, id}; }

/// Phrase nodes U, patent nodes V with texts D, retrieval relation E^r and
/// citation relation E^c (directed, plus a symmetrized view for sampling).
class Universe {
 public:
  std::size_t phrase_count() const { return phrases_.size(); }
  std::size_t patent_count() const { return patent_ids_.size(); }
  std::size_t retrieval_k() const { return k_; }
  std::size_t isolated_count() const {
    return static_cast<std::size_t>(std::count_if(
        phrase_patents_.begin(), phrase_patents_.end(),
        [](const auto& v) { return v.empty(); }));
  }

  const std::string& phrase(std::uint32_t id) const { return phrases_.at(id); }
  const std::vector<std::string>& phrases() const { return phrases_; }
  const std::string& patent_id(std::uint32_t id) const { return patent_ids_.at(id); }
  const std::string& patent_text(std::uint32_t id) const { return patent_text_.at(id); }

  std::optional<std::uint32_t> find_phrase(const std::string& text) const {
    auto it = phrase_lookup_.find(text);
    if (it == phrase_lookup_.end()) return std::nullopt;
    return it->second;
  }
  std::uint32_t phrase_id(const std::string& text) const {
    auto id = find_phrase(text);
    if (!id) throw DataError("unknown phrase: " + text);
    return *id;
  }

  /// Retrieved patents of a phrase, in retrieval rank order.
  const std::vector<std::uint32_t>& retrieved(std::uint32_t phrase) const {
    return phrase_patents_.at(phrase);
  }
  /// Phrases that retrieved a patent, ascending.
  const std::vector<std::uint32_t>& retrieving(std::uint32_t patent) const {
    return patent_phrases_.at(patent);
  }
  const std::vector<std::uint32_t>& cites(std::uint32_t patent) const {
    return cites_.at(patent);
  }
  /// Patents citing or cited by `patent`, ascending.
  const std::vector<std::uint32_t>& citation_neighbors(std::uint32_t patent) const {
    return cite_sym_.at(patent);
  }

  std::size_t retrieval_edge_count() const {
    std::size_t n = 0;
    for (const auto& v : phrase_patents_) n += v.size();
    return n;
  }
  std::size_t citation_edge_count() const {
    std::size_t n = 0;
    for (const auto& v : cites_) n += v.size();
    return n;
  }

  /// Adds a phrase node (if absent) whose retrieval edges are its top-k
  /// search results. Returns its id. Used for query/evaluation phrases
  /// outside the RAKE inventory.
  std::uint32_t add_phrase(const std::string& text, const InvertedIndex& index) {
    if (auto id = find_phrase(text)) return *id;
    auto id = static_cast<std::uint32_t>(phrases_.size());
    phrases_.push_back(text);
    phrase_lookup_.emplace(text, id);
    phrase_patents_.emplace_back();
    for (const auto& hit : index.search(tokenize(text), k_)) {
      phrase_patents_.back().push_back(hit.doc);
      auto& rev = patent_phrases_.at(hit.doc);
      rev.insert(std::upper_bound(rev.begin(), rev.end(), id), id);
    }
    return id;
  }

  static Universe build(const Corpus& corpus, const std::vector<std::string>& phrases,
                        const InvertedIndex& index, std::size_t k = 5);

  void save(const std::filesystem::path& prefix) const;
  static Universe load(const std::filesystem::path& prefix, const Corpus& corpus);

  bool operator==(const Universe& o) const {
    return phrases_ == o.phrases_ && patent_ids_ == o.patent_ids_ &&
           phrase_patents_ == o.phrase_patents_ && cites_ == o.cites_ && k_ == o.k_;
  }

 private:
  void init_patents(const Corpus& corpus) {
    for (const auto& [id, rec] : corpus.patents) {
      patent_lookup_.emplace(id, static_cast<std::uint32_t>(patent_ids_.size()));
      patent_ids_.push_back(id);
      patent_text_.push_back(rec.abstract);
    }
    patent_phrases_.assign(patent_ids_.size(), {});
    cites_.assign(patent_ids_.size(), {});
    cite_sym_.assign(patent_ids_.size(), {});
    for (const auto& [src, dst] : corpus.citations) {
      auto s = patent_lookup_.at(src), d = patent_lookup_.at(dst);
      cites_[s].push_back(d);
      cite_sym_[s].push_back(d);
      cite_sym_[d].push_back(s);
    }
    for (auto& v : cites_) std::sort(v.begin(), v.end());
    for (auto& v : cite_sym_) {
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
    }
  }

  std::vector<std::string> phrases_;
  std::unordered_map<std::string, std::uint32_t> phrase_lookup_;
  std::vector<std::string> patent_ids_;
  std::vector<std::string> patent_text_;
  std::unordered_map<std::string, std::uint32_t> patent_lookup_;
  std::vector<std::vector<std::uint32_t>> phrase_patents_;
  std::vector<std::vector<std::uint32_t>> patent_phrases_;
  std::vector<std::vector<std::uint32_t>> cites_;
  std::vector<std::vector<std::uint32_t>> cite_sym_;
  std::size_t k_ = 5;
};

inline Universe Universe::build(const Corpus& corpus,
                                const std::vector<std::string>& phrases,
                                const InvertedIndex& index, std::size_t k) {
  if (phrases.empty()) throw DataError("cannot build a universe from an empty phrase set");
  if (index.doc_count() != corpus.size())
    throw DataError("index and corpus disagree on document count");
  Universe u;
  u.k_ = k;
  u.init_patents(corpus);
  for (const auto& p : phrases) u.add_phrase(p, index);
  if (auto iso = u.isolated_count())
    spdlog::warn("{} phrase(s) retrieved no patents and stay isolated", iso);
  return u;
}

inline Universe build_universe(const Corpus& corpus, const PhraseSet& phrases,
                               const InvertedIndex& index, std::size_t k = 5) {
  return Universe::build(corpus, phrases.texts(), index, k);
}

// Three files: <prefix>.nodes, <prefix>.retrieval, <prefix>.citations.
inline void Universe::save(const std::filesystem::path& prefix) const {
  auto open = [&](const char* ext) {
    std::ofstream out(prefix.string() + ext);
    if (!out) throw DataError("cannot write universe file: " + prefix.string() + ext);
    return out;
  };
  auto nodes = open(".nodes");
  nodes << "# rasim-universe v1 k=" << k_ << '\n';
  for (const auto& p : phrases_) nodes << "phrase\t" << p << '\n';
  for (const auto& p : patent_ids_) nodes << "patent\t" << p << '\n';
  auto ret = open(".retrieval");
  for (std::size_t i = 0; i < phrases_.size(); ++i)
    for (auto d : phrase_patents_[i]) ret << phrases_[i] << '\t' << patent_ids_[d] << '\n';
  auto cit = open(".citations");
  for (std::size_t s = 0; s < cites_.size(); ++s)
    for (auto d : cites_[s]) cit << patent_ids_[s] << '\t' << patent_ids_[d] << '\n';
}

inline Universe Universe::load(const std::filesystem::path& prefix, const Corpus& corpus) {
  auto open = [&](const char* ext) {
    std::ifstream in(prefix.string() + ext);
    if (!in) throw DataError("cannot open universe file: " + prefix.string() + ext);
    return in;
  };
  Universe u;
  u.init_patents(corpus);
  auto nodes = open(".nodes");
  std::string line;
  if (!std::getline(nodes, line) || line.rfind("# rasim-universe v1 k=", 0) != 0)
    throw DataError("universe nodes file: missing version header");
  u.k_ = std::stoull(line.substr(std::string("# rasim-universe v1 k=").size()));
  std::size_t patents_seen = 0;
  while (std::getline(nodes, line)) {
    auto tab = line.find('\t');
    if (tab == std::string::npos) throw DataError("universe nodes file: bad line");
    auto kind = line.substr(0, tab), name = line.substr(tab + 1);
    if (kind == "phrase") {
      auto id = static_cast<std::uint32_t>(u.phrases_.size());
      u.phrases_.push_back(name);
      u.phrase_lookup_.emplace(name, id);
      u.phrase_patents_.emplace_back();
    } else if (kind == "patent") {
      if (patents_seen >= u.patent_ids_.size() || u.patent_ids_[patents_seen] != name)
        throw DataError("universe nodes file does not match corpus at patent " + name);
      ++patents_seen;
    } else {
      throw DataError("universe nodes file: unknown node kind " + kind);
    }
  }
  if (patents_seen != u.patent_ids_.size())
    throw DataError("universe nodes file does not match corpus patent count");
  auto ret = open(".retrieval");
  while (std::getline(ret, line)) {
    auto tab = line.find('\t');
    if (tab == std::string::npos) throw DataError("universe retrieval file: bad line");
    auto p = u.phrase_id(line.substr(0, tab));
    auto it = u.patent_lookup_.find(line.substr(tab + 1));
    if (it == u.patent_lookup_.end()) throw DataError("universe retrieval file: unknown patent");
    u.phrase_patents_[p].push_back(it->second);
    auto& rev = u.patent_phrases_[it->second];
    rev.insert(std::upper_bound(rev.begin(), rev.end(), p), p);
  }
  // Citations come from the corpus; the file must agree with it.
  auto cit = open(".citations");
  std::size_t n = 0;
  while (std::getline(cit, line)) {
    auto tab = line.find('\t');
    if (tab == std::string::npos) throw DataError("universe citation file: bad line");
    if (!corpus.citations.count({line.substr(0, tab), line.substr(tab + 1)}))
      throw DataError("universe citation file disagrees with corpus");
    ++n;
  }
  if (n != corpus.citations.size())
    throw DataError("universe citation file disagrees with corpus");
  return u;
}

/// Ego graph G_u sampled around a focal phrase. Nodes are kept sorted; edges
/// are the ones traversed while sampling. Citation edges are undirected and
/// stored as (min, max) patent pairs.
struct EgoGraph {
  std::uint32_t focal = 0;
  std::vector<NodeRef> nodes;         // sorted
  std::vector<int> iteration;         // parallel to nodes; focal = 0
  std::set<std::pair<std::uint32_t, std::uint32_t>> retrieval_edges;  // (phrase, patent)
  std::set<std::pair<std::uint32_t, std::uint32_t>> citation_edges;   // (lo, hi)

  std::size_t phrase_count() const {
    return static_cast<std::size_t>(
        std::count_if(nodes.begin(), nodes.end(), [](NodeRef n) { return n.is_phrase(); }));
  }
  std::size_t patent_count() const { return nodes.size() - phrase_count(); }

  bool contains(NodeRef n) const { return std::binary_search(nodes.begin(), nodes.end(), n); }
  std::size_t local(NodeRef n) const {
    auto it = std::lower_bound(nodes.begin(), nodes.end(), n);
    if (it == nodes.end() || *it != n) throw std::out_of_range("node not in ego graph");
    return static_cast<std::size_t>(it - nodes.begin());
  }
  bool operator==(const EgoGraph&) const = default;
};

struct SampleConfig {
  int iterations = 2;
  std::size_t fanout_r = 5;
  std::size_t fanout_c = 5;
};

namespace detail {

/// Up to `count` distinct elements of `pool`, drawn without replacement.
inline std::vector<std::uint32_t> sample_without_replacement(
    std::vector<std::uint32_t> pool, std::size_t count, std::mt19937_64& rng) {
  if (pool.size() <= count) return pool;
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(count);
  return pool;
}

}  // namespace detail

/// Recursive neighbor sampling. Each iteration visits a snapshot of the
/// current node set; every visited node samples up to fanout_r retrieval
/// neighbors and (patents only) up to fanout_c citation neighbors. The RNG
/// for one visit is keyed by (seed, focal, iteration, node).
inline EgoGraph sample_ego(const Universe& universe, std::uint32_t focal,
                           const SampleConfig& cfg, std::uint64_t seed) {
  if (focal >= universe.phrase_count())
    throw DataError("unknown phrase id " + std::to_string(focal));
  if (cfg.iterations < 1 || cfg.fanout_r < 1 || cfg.fanout_c < 1)
    throw std::invalid_argument("sample_ego: iterations and fanouts must be >= 1");

  std::map<NodeRef, int> node_iter{{phrase_node(focal), 0}};
  EgoGraph ego;
  ego.focal = focal;
  for (int it = 1; it <= cfg.iterations; ++it) {
    std::vector<NodeRef> frontier;
    frontier.reserve(node_iter.size());
    for (const auto& [n, _] : node_iter) frontier.push_back(n);
    for (NodeRef n : frontier) {
      std::uint64_t key = hash_combine(hash_combine(hash_combine(seed, focal),
                                                    static_cast<std::uint64_t>(it)),
                                       n.key());
      std::mt19937_64 rng(key);
      if (n.is_phrase()) {
        for (auto p : detail::sample_without_replacement(universe.retrieved(n.id),
                                                         cfg.fanout_r, rng)) {
          node_iter.emplace(patent_node(p), it);
          ego.retrieval_edges.emplace(n.id, p);
        }
      } else {
        for (auto q : detail::sample_without_replacement(universe.retrieving(n.id),
                                                         cfg.fanout_r, rng)) {
          node_iter.emplace(phrase_node(q), it);
          ego.retrieval_edges.emplace(q, n.id);
        }
        for (auto c : detail::sample_without_replacement(universe.citation_neighbors(n.id),
                                                         cfg.fanout_c, rng)) {
          node_iter.emplace(patent_node(c), it);
          ego.citation_edges.emplace(std::min(n.id, c), std::max(n.id, c));
        }
      }
    }
  }
  for (const auto& [n, i] : node_iter) {
    ego.nodes.push_back(n);
    ego.iteration.push_back(i);
  }
  return ego;
}

/// Graphviz dump: phrase nodes as boxes, citation edges dashed.
inline std::string to_dot(const EgoGraph& ego, const Universe& universe) {
  auto esc = [](std::string s) {
    std::string out;
    for (char c : s) {
      if (c == '"' || c == '\\') out.push_back('\\');
      out.push_back(c);
    }
    return out;
  };
  std::ostringstream os;
  os << "graph ego {\n";
  for (std::size_t i = 0; i < ego.nodes.size(); ++i) {
    auto n = ego.nodes[i];
    if (n.is_phrase()) {
      os << "  u" << n.id << " [shape=box,label=\"" << esc(universe.phrase(n.id)) << "\""
         << (n.id == ego.focal ? ",style=bold" : "") << "];\n";
    } else {
      os << "  v" << n.id << " [label=\"" << esc(universe.patent_id(n.id)) << "\"];\n";
    }
  }
  for (auto [p, v] : ego.retrieval_edges) os << "  u" << p << " -- v" << v << ";\n";
  for (auto [a, b] : ego.citation_edges) os << "  v" << a << " -- v" << b << " [style=dashed];\n";
  os << "}\n";
  return os.str();
}

}  // namespace rasim

#endif  // RASIM_UNIVERSE_HPP
