#ifndef RASIM_GNN_HPP
#define RASIM_GNN_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "rasim/encoder.hpp"
#include "rasim/errors.hpp"
#include "rasim/universe.hpp"

namespace rasim {

/// Query/key/value/skip projections of one attention transform.
struct AttentionHeadParams {
  Mat Wq, Wk, Wv, Ws;

  static AttentionHeadParams zeros(std::size_t d) {
    auto n = static_cast<long>(d);
    return {Mat::Zero(n, n), Mat::Zero(n, n), Mat::Zero(n, n), Mat::Zero(n, n)};
  }
  std::array<Mat*, 4> mats() { return {&Wq, &Wk, &Wv, &Ws}; }
  std::array<const Mat*, 4> mats() const { return {&Wq, &Wk, &Wv, &Ws}; }
};

enum Relation : std::size_t { kPhraseRetrieval = 0, kPatentRetrieval = 1, kPatentCitation = 2 };

/// One layer: phrase update over retrieved patents, patent update over
/// retrieving phrases, patent update over citation neighbors.
struct GnnLayer {
  std::array<AttentionHeadParams, 3> heads;
};

struct GnnParams {
  std::size_t dim = 0;
  std::vector<GnnLayer> layers;

  std::size_t num_layers() const { return layers.size(); }
  std::size_t param_count() const { return 3 * layers.size() * 4 * dim * dim; }

  /// Entries N(0, 1/d), seeded.
  static GnnParams init(std::size_t dim, std::size_t num_layers, std::uint64_t seed) {
    if (dim < 1 || num_layers < 1)
      throw std::invalid_argument("GnnParams: dim and layer count must be >= 1");
    GnnParams p = zeros(dim, num_layers);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(dim)));
    for (auto& layer : p.layers)
      for (auto& head : layer.heads)
        for (Mat* m : head.mats())
          for (long i = 0; i < m->size(); ++i) m->data()[i] = normal(rng);
    return p;
  }

  static GnnParams zeros(std::size_t dim, std::size_t num_layers) {
    GnnParams p;
    p.dim = dim;
    p.layers.resize(num_layers);
    for (auto& layer : p.layers)
      for (auto& head : layer.heads) head = AttentionHeadParams::zeros(dim);
    return p;
  }

  template <class F>
  void for_each_matrix(F&& f) {
    for (auto& layer : layers)
      for (auto& head : layer.heads)
        for (Mat* m : head.mats()) f(*m);
  }
  template <class F>
  void for_each_matrix(F&& f) const {
    for (const auto& layer : layers)
      for (const auto& head : layer.heads)
        for (const Mat* m : head.mats()) f(*m);
  }
};

/// Recorded state of one attention aggregation, enough to run it backwards.
struct AggregateTape {
  Vec target;
  std::vector<Vec> neighbors;
  Vec query;
  std::vector<Vec> keys;
  std::vector<Vec> values;
  Vec alpha;
  Vec pre;  // W_s t + sum_j alpha_j W_v n_j, before relu
};

inline void check_dims(const AttentionHeadParams& p, const Vec& v) {
  if (p.Wq.cols() != v.size())
    throw ShapeError("attention input has dimension " + std::to_string(v.size()) +
                     ", expected " + std::to_string(p.Wq.cols()));
}

/// Scaled dot-product attention with a self skip term:
///   alpha = softmax_j((W_q t) . (W_k n_j) / sqrt(d))
///   out   = relu(W_s t + sum_j alpha_j W_v n_j)
/// An empty neighbor list returns `target` unchanged.
inline Vec gat_forward(const AttentionHeadParams& p, const Vec& target,
                       const std::vector<const Vec*>& neighbors,
                       AggregateTape* tape = nullptr) {
  check_dims(p, target);
  if (neighbors.empty()) {
    if (tape) {
      tape->target = target;
      tape->neighbors.clear();
    }
    return target;
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(target.size()));
  Vec q = p.Wq * target;
  std::vector<Vec> keys, values;
  keys.reserve(neighbors.size());
  values.reserve(neighbors.size());
  Vec scores(static_cast<long>(neighbors.size()));
  for (std::size_t j = 0; j < neighbors.size(); ++j) {
    check_dims(p, *neighbors[j]);
    keys.push_back(p.Wk * *neighbors[j]);
    values.push_back(p.Wv * *neighbors[j]);
    scores(static_cast<long>(j)) = q.dot(keys.back()) * scale;
  }
  Vec alpha = (scores.array() - scores.maxCoeff()).exp();
  alpha /= alpha.sum();
  Vec pre = p.Ws * target;
  for (std::size_t j = 0; j < neighbors.size(); ++j) pre += alpha(static_cast<long>(j)) * values[j];
  Vec out = pre.cwiseMax(0.0);
  if (tape) {
    tape->target = target;
    tape->neighbors.clear();
    for (const Vec* n : neighbors) tape->neighbors.push_back(*n);
    tape->query = std::move(q);
    tape->keys = std::move(keys);
    tape->values = std::move(values);
    tape->alpha = std::move(alpha);
    tape->pre = std::move(pre);
  }
  return out;
}

inline Vec gat_aggregate(const AttentionHeadParams& p, const Vec& target,
                         const std::vector<Vec>& neighbors) {
  std::vector<const Vec*> ptrs;
  for (const auto& n : neighbors) ptrs.push_back(&n);
  return gat_forward(p, target, ptrs);
}

/// Reverse pass of gat_forward. Accumulates into `grad`, `d_target` and
/// `d_neighbors` (sized like the tape's neighbor list).
inline void gat_backward(const AttentionHeadParams& p, const AggregateTape& tape,
                         const Vec& d_out, AttentionHeadParams& grad, Vec& d_target,
                         std::vector<Vec>& d_neighbors) {
  if (tape.neighbors.empty()) {
    d_target += d_out;
    return;
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(tape.target.size()));
  Vec dz = d_out.cwiseProduct((tape.pre.array() > 0.0).cast<double>().matrix());
  grad.Ws.noalias() += dz * tape.target.transpose();
  d_target.noalias() += p.Ws.transpose() * dz;

  const auto m = tape.neighbors.size();
  Vec d_alpha(static_cast<long>(m));
  Vec wv_t_dz = p.Wv.transpose() * dz;
  for (std::size_t j = 0; j < m; ++j) {
    double a = tape.alpha(static_cast<long>(j));
    grad.Wv.noalias() += (a * dz) * tape.neighbors[j].transpose();
    d_neighbors[j] += a * wv_t_dz;
    d_alpha(static_cast<long>(j)) = dz.dot(tape.values[j]);
  }
  double mean = tape.alpha.dot(d_alpha);
  Vec d_score = tape.alpha.cwiseProduct((d_alpha.array() - mean).matrix());

  Vec d_query = Vec::Zero(tape.query.size());
  for (std::size_t j = 0; j < m; ++j) {
    double ds = d_score(static_cast<long>(j)) * scale;
    d_query += ds * tape.keys[j];
    Vec d_key = ds * tape.query;
    grad.Wk.noalias() += d_key * tape.neighbors[j].transpose();
    d_neighbors[j].noalias() += p.Wk.transpose() * d_key;
  }
  grad.Wq.noalias() += d_query * tape.target.transpose();
  d_target.noalias() += p.Wq.transpose() * d_query;
}

/// Element-wise mean of the two patent relation outputs.
inline Vec patent_combine(const Vec& h_retrieval, const Vec& h_citation) {
  if (h_retrieval.size() != h_citation.size())
    throw ShapeError("patent_combine: dimension mismatch");
  return 0.5 * (h_retrieval + h_citation);
}

/// phi(u) = f(u) + h^L(u).
inline Vec combine_embedding(const Vec& h0, const Vec& hL) {
  if (h0.size() != hL.size()) throw ShapeError("combine_embedding: dimension mismatch");
  return h0 + hL;
}

/// Per-node states h^0..h^L of one ego graph plus the tape for backward.
struct NodeStates {
  const EgoGraph* ego = nullptr;
  std::vector<Encoding> inputs;                 // h^0 with bucket lists
  std::vector<std::vector<Vec>> h;              // h[l][node]
  std::vector<std::vector<std::size_t>> retrieval_nbrs;  // local indices, sorted
  std::vector<std::vector<std::size_t>> citation_nbrs;
  // tapes[l][node][relation]; phrases use only kPhraseRetrieval.
  std::vector<std::vector<std::array<AggregateTape, 3>>> tapes;

  std::size_t size() const { return inputs.size(); }
  std::size_t layers() const { return h.empty() ? 0 : h.size() - 1; }
  const Vec& h0(std::size_t i) const { return h.front()[i]; }
  const Vec& top(std::size_t i) const { return h.back()[i]; }
  std::size_t focal_local() const { return ego->local(phrase_node(ego->focal)); }
  Vec phi() const {
    auto i = focal_local();
    return combine_embedding(h0(i), top(i));
  }
};

inline void build_adjacency(const EgoGraph& ego, NodeStates& s) {
  const auto n = ego.nodes.size();
  s.retrieval_nbrs.assign(n, {});
  s.citation_nbrs.assign(n, {});
  for (auto [p, v] : ego.retrieval_edges) {
    auto a = ego.local(phrase_node(p)), b = ego.local(patent_node(v));
    s.retrieval_nbrs[a].push_back(b);
    s.retrieval_nbrs[b].push_back(a);
  }
  for (auto [x, y] : ego.citation_edges) {
    auto a = ego.local(patent_node(x)), b = ego.local(patent_node(y));
    s.citation_nbrs[a].push_back(b);
    s.citation_nbrs[b].push_back(a);
  }
  for (auto& v : s.retrieval_nbrs) std::sort(v.begin(), v.end());
  for (auto& v : s.citation_nbrs) std::sort(v.begin(), v.end());
}

/// Hop distance of every local node from the focal phrase.
inline std::vector<std::size_t> focal_distances(const NodeStates& s) {
  const auto n = s.size();
  std::vector<std::size_t> dist(n, n + 1);
  std::vector<std::size_t> queue{s.focal_local()};
  dist[queue.front()] = 0;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    auto i = queue[head];
    for (const auto* adj : {&s.retrieval_nbrs[i], &s.citation_nbrs[i]})
      for (auto j : *adj)
        if (dist[j] > dist[i] + 1) {
          dist[j] = dist[i] + 1;
          queue.push_back(j);
        }
  }
  return dist;
}

/// Runs the two-relation attention stack over an ego graph. All updates in
/// a layer read layer-l states only. `ego` must outlive the result.
///
/// With `focal_only`, layer l only updates nodes within L-1-l hops of the
/// focal phrase (the rest of h^L is not meaningful) and no tape is kept.
inline NodeStates forward_ego(const EgoGraph& ego, const Universe& universe,
                              const TextEncoder& encoder, const GnnParams& params,
                              bool focal_only = false) {
  if (encoder.dim() != params.dim) throw ShapeError("encoder and GNN dimensions differ");
  NodeStates s;
  s.ego = &ego;
  const auto n = ego.nodes.size();
  const auto num_layers = params.num_layers();
  build_adjacency(ego, s);
  s.inputs.reserve(n);
  s.h.assign(num_layers + 1, std::vector<Vec>(n));
  for (std::size_t i = 0; i < n; ++i) {
    s.inputs.push_back(encoder.encode_node(ego.nodes[i], universe));
    s.h[0][i] = s.inputs.back().value;
  }
  std::vector<std::size_t> dist;
  if (focal_only) {
    dist = focal_distances(s);
  } else {
    s.tapes.assign(num_layers, std::vector<std::array<AggregateTape, 3>>(n));
  }
  std::vector<const Vec*> nb;
  for (std::size_t l = 0; l < num_layers; ++l) {
    const auto& layer = params.layers[l];
    const auto& cur = s.h[l];
    for (std::size_t i = 0; i < n; ++i) {
      if (focal_only && dist[i] + l + 1 > num_layers) {
        s.h[l + 1][i] = cur[i];
        continue;
      }
      auto* tape = focal_only ? nullptr : &s.tapes[l][i];
      auto rec = [&](Relation r) { return tape ? &(*tape)[r] : nullptr; };
      nb.clear();
      for (auto j : s.retrieval_nbrs[i]) nb.push_back(&cur[j]);
      if (ego.nodes[i].is_phrase()) {
        s.h[l + 1][i] = gat_forward(layer.heads[kPhraseRetrieval], cur[i], nb,
                                    rec(kPhraseRetrieval));
      } else {
        Vec r = gat_forward(layer.heads[kPatentRetrieval], cur[i], nb, rec(kPatentRetrieval));
        nb.clear();
        for (auto j : s.citation_nbrs[i]) nb.push_back(&cur[j]);
        Vec c = gat_forward(layer.heads[kPatentCitation], cur[i], nb, rec(kPatentCitation));
        s.h[l + 1][i] = patent_combine(r, c);
      }
    }
  }
  return s;
}

/// Gradient buffers for all trainable parameters.
struct ModelGrad {
  GnnParams gnn;    // same layout as the parameters
  RowMat table;     // encoder bucket table (empty when encoder is frozen)

  static ModelGrad zeros_like(const GnnParams& p, const TextEncoder& enc) {
    ModelGrad g;
    g.gnn = GnnParams::zeros(p.dim, p.num_layers());
    if (enc.trainable()) g.table = RowMat::Zero(enc.table().rows(), enc.table().cols());
    return g;
  }
  void set_zero() {
    gnn.for_each_matrix([](Mat& m) { m.setZero(); });
    if (table.size()) table.setZero();
  }
  ModelGrad& operator+=(const ModelGrad& o) {
    for (std::size_t l = 0; l < gnn.layers.size(); ++l)
      for (std::size_t r = 0; r < 3; ++r) {
        auto dst = gnn.layers[l].heads[r].mats();
        auto src = o.gnn.layers[l].heads[r].mats();
        for (std::size_t k = 0; k < 4; ++k) *dst[k] += *src[k];
      }
    if (table.size()) table += o.table;
    return *this;
  }
};

/// Reverse pass through one ego graph. `d_top[i]` is d(loss)/d(h^L_i) and
/// `d_input[i]` an extra d(loss)/d(h^0_i) (for phi's skip term); either may
/// be empty. Results are accumulated into `grad`.
inline void backward(const NodeStates& s, const GnnParams& params, const TextEncoder& encoder,
                     const std::vector<Vec>& d_top, const std::vector<Vec>& d_input,
                     ModelGrad& grad) {
  const auto n = s.size();
  if (s.layers() != params.num_layers() || s.tapes.size() != params.num_layers())
    throw std::logic_error("backward: tape does not match parameters");
  if ((!d_top.empty() && d_top.size() != n) || (!d_input.empty() && d_input.size() != n))
    throw std::logic_error("backward: gradient list does not match ego graph");
  const long d = static_cast<long>(params.dim);
  std::vector<Vec> upper(n, Vec::Zero(d));
  if (!d_top.empty())
    for (std::size_t i = 0; i < n; ++i)
      if (d_top[i].size()) upper[i] = d_top[i];

  std::vector<Vec> d_nb;
  for (std::size_t l = params.num_layers(); l-- > 0;) {
    std::vector<Vec> lower(n, Vec::Zero(d));
    const auto& layer = params.layers[l];
    auto& glayer = grad.gnn.layers[l];
    for (std::size_t i = 0; i < n; ++i) {
      if (upper[i].isZero(0.0)) continue;
      const auto& tape = s.tapes[l][i];
      auto run = [&](std::size_t rel, const std::vector<std::size_t>& nbrs, const Vec& dout) {
        d_nb.assign(nbrs.size(), Vec::Zero(d));
        gat_backward(layer.heads[rel], tape[rel], dout, glayer.heads[rel], lower[i], d_nb);
        for (std::size_t j = 0; j < nbrs.size(); ++j) lower[nbrs[j]] += d_nb[j];
      };
      if (s.ego->nodes[i].is_phrase()) {
        run(kPhraseRetrieval, s.retrieval_nbrs[i], upper[i]);
      } else {
        Vec half = 0.5 * upper[i];
        run(kPatentRetrieval, s.retrieval_nbrs[i], half);
        run(kPatentCitation, s.citation_nbrs[i], half);
      }
    }
    upper = std::move(lower);
  }
  if (!encoder.trainable()) return;
  for (std::size_t i = 0; i < n; ++i) {
    Vec g = upper[i];
    if (!d_input.empty() && d_input[i].size()) g += d_input[i];
    if (!g.isZero(0.0)) encoder.scatter_gradient(s.inputs[i], g, grad.table);
  }
}

}  // namespace rasim

#endif  // RASIM_GNN_HPP
