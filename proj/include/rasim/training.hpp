#ifndef RASIM_TRAINING_HPP
#define RASIM_TRAINING_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "rasim/encoder.hpp"
#include "rasim/errors.hpp"
#include "rasim/gnn.hpp"
#include "rasim/metrics.hpp"
#include "rasim/universe.hpp"

namespace rasim {

// ---------------------------------------------------------------------------
// Losses

inline double dis(const Vec& x, const Vec& y) {
  if (x.size() != y.size()) throw ShapeError("dis: dimension mismatch");
  return (x - y).norm();
}

/// max{dis(a,p) - dis(a,n) + margin, 0}
inline double triplet_margin_loss(const Vec& a, const Vec& p, const Vec& n, double margin) {
  if (a.size() != p.size() || a.size() != n.size())
    throw ShapeError("triplet loss: dimension mismatch");
  if (margin < 0) throw std::invalid_argument("triplet loss: margin must be >= 0");
  return std::max(dis(a, p) - dis(a, n) + margin, 0.0);
}

/// Patent anchor, positive phrase that retrieved it, in-batch negative phrase.
inline double retrieval_loss(const Vec& a, const Vec& p, const Vec& n, double margin_r) {
  return triplet_margin_loss(a, p, n, margin_r);
}

/// Patent anchor, citation-linked positive patent, in-batch negative patent.
inline double citation_loss(const Vec& a, const Vec& p, const Vec& n, double margin_c) {
  return triplet_margin_loss(a, p, n, margin_c);
}

inline double total_loss(double sum_retrieval, double sum_citation, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must be in [0,1]");
  return alpha * sum_retrieval + (1.0 - alpha) * sum_citation;
}

/// (cos(phi1, phi2) - y)^2
inline double supervised_loss(const Vec& phi1, const Vec& phi2, double y) {
  if (!(y >= 0.0 && y <= 1.0)) throw std::invalid_argument("label must be in [0,1]");
  double d = infer_similarity(phi1, phi2) - y;
  return d * d;
}

inline double mean_loss(const std::vector<double>& losses) {
  if (losses.empty()) throw std::invalid_argument("mean of an empty batch");
  double s = 0;
  for (double l : losses) s += l;
  return s / static_cast<double>(losses.size());
}

// ---------------------------------------------------------------------------
// Batches

struct NodeAt {
  std::size_t graph = 0;
  std::size_t node = 0;  // local index in that ego graph
  bool operator==(const NodeAt&) const = default;
};

struct Triplet {
  NodeAt anchor, positive, negative;
  bool operator==(const Triplet&) const = default;
};

struct TripletBatch {
  std::vector<std::uint32_t> focal;
  std::vector<EgoGraph> graphs;
  std::vector<Triplet> retrieval;
  std::vector<Triplet> citation;
  std::size_t skipped = 0;

  bool empty() const { return retrieval.empty() && citation.empty(); }
  bool operator==(const TripletBatch&) const = default;
};

namespace detail {

inline constexpr int kNegativeAttempts = 10;

// Draws a negative from `pool` that is not a node of `own`.
inline std::optional<NodeAt> draw_negative(const std::vector<NodeAt>& pool,
                                           const std::vector<EgoGraph>& graphs,
                                           const EgoGraph& own, std::mt19937_64& rng) {
  if (pool.empty()) return std::nullopt;
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  for (int attempt = 0; attempt < kNegativeAttempts; ++attempt) {
    const auto& cand = pool[pick(rng)];
    if (!own.contains(graphs[cand.graph].nodes[cand.node])) return cand;
  }
  return std::nullopt;
}

}  // namespace detail

/// Enumerates triplets over already-sampled ego graphs: one retrieval triplet
/// per retrieval edge (patent anchor, phrase positive) and one citation
/// triplet per citation edge (lower patent id is the anchor). Negatives come
/// from the other graphs of the batch and never belong to the anchor's graph.
inline void add_triplets(TripletBatch& batch, std::uint64_t seed) {
  const auto& graphs = batch.graphs;
  std::mt19937_64 rng(hash_combine(seed, fnv1a64("negatives")));
  for (std::size_t g = 0; g < graphs.size(); ++g) {
    const auto& own = graphs[g];
    std::vector<NodeAt> phrases, patents;
    for (std::size_t h = 0; h < graphs.size(); ++h) {
      if (h == g) continue;
      for (std::size_t i = 0; i < graphs[h].nodes.size(); ++i)
        (graphs[h].nodes[i].is_phrase() ? phrases : patents).push_back({h, i});
    }
    for (auto [p, v] : own.retrieval_edges) {
      Triplet t{{g, own.local(patent_node(v))}, {g, own.local(phrase_node(p))}, {}};
      if (auto neg = detail::draw_negative(phrases, graphs, own, rng)) {
        t.negative = *neg;
        batch.retrieval.push_back(t);
      } else {
        ++batch.skipped;
      }
    }
    for (auto [a, b] : own.citation_edges) {
      Triplet t{{g, own.local(patent_node(a))}, {g, own.local(patent_node(b))}, {}};
      if (auto neg = detail::draw_negative(patents, graphs, own, rng)) {
        t.negative = *neg;
        batch.citation.push_back(t);
      } else {
        ++batch.skipped;
      }
    }
  }
  if (batch.skipped)
    spdlog::debug("skipped {} triplet(s) without a valid in-batch negative", batch.skipped);
}

inline TripletBatch build_batch(const Universe& universe, const std::vector<std::uint32_t>& phrases,
                                const SampleConfig& sampling, std::uint64_t seed) {
  if (phrases.size() < 2)
    throw std::invalid_argument("build_batch: in-batch negatives need batch_size >= 2");
  TripletBatch batch;
  batch.focal = phrases;
  for (auto u : phrases) batch.graphs.push_back(sample_ego(universe, u, sampling, seed));
  add_triplets(batch, seed);
  return batch;
}

struct BatchLoss {
  double total = 0;
  double sum_r = 0;
  double sum_c = 0;
};

namespace detail {

// Gradient of max{|a-p| - |a-n| + m, 0} scaled by `w`.
inline void triplet_grad(const Vec& a, const Vec& p, const Vec& n, double w, Vec& ga, Vec& gp,
                         Vec& gn) {
  Vec ap = a - p, an = a - n;
  double dap = ap.norm(), dan = an.norm();
  if (dap > 0) {
    ga += (w / dap) * ap;
    gp -= (w / dap) * ap;
  }
  if (dan > 0) {
    ga -= (w / dan) * an;
    gn += (w / dan) * an;
  }
}

}  // namespace detail

/// Sums the triplet losses over h^L states. With `d_top`, also accumulates
/// d(total)/d(h^L) per graph and node (d_top[g] must be sized to graph g).
inline BatchLoss batch_loss(const TripletBatch& batch, const std::vector<NodeStates>& states,
                            double alpha, double margin_r, double margin_c,
                            std::vector<std::vector<Vec>>* d_top = nullptr) {
  BatchLoss out;
  auto h = [&](const NodeAt& n) -> const Vec& { return states[n.graph].top(n.node); };
  auto run = [&](const std::vector<Triplet>& ts, double margin, double weight, double& sum) {
    for (const auto& t : ts) {
      double l = triplet_margin_loss(h(t.anchor), h(t.positive), h(t.negative), margin);
      sum += l;
      if (d_top && l > 0 && weight != 0) {
        auto& ga = (*d_top)[t.anchor.graph][t.anchor.node];
        auto& gp = (*d_top)[t.positive.graph][t.positive.node];
        auto& gn = (*d_top)[t.negative.graph][t.negative.node];
        detail::triplet_grad(h(t.anchor), h(t.positive), h(t.negative), weight, ga, gp, gn);
      }
    }
  };
  run(batch.retrieval, margin_r, alpha, out.sum_r);
  run(batch.citation, margin_c, 1.0 - alpha, out.sum_c);
  out.total = total_loss(out.sum_r, out.sum_c, alpha);
  return out;
}

/// Weighted triplet objective of a batch of triplets; errors on an empty batch.
inline double total_loss(const TripletBatch& batch, const std::vector<NodeStates>& states,
                         double alpha, double margin_r, double margin_c) {
  if (batch.empty()) throw std::invalid_argument("total_loss: empty batch");
  return batch_loss(batch, states, alpha, margin_r, margin_c).total;
}

// ---------------------------------------------------------------------------
// Model, optimizer, checkpoints

struct Model {
  TextEncoder encoder;
  GnnParams gnn;

  static Model init(std::size_t dim, std::size_t bucket_count, std::size_t layers,
                    std::uint64_t seed) {
    return {TextEncoder::hash_mean(dim, bucket_count, hash_combine(seed, fnv1a64("encoder"))),
            GnnParams::init(dim, layers, hash_combine(seed, fnv1a64("gnn")))};
  }
};

inline std::vector<NodeStates> forward_batch(const std::vector<EgoGraph>& graphs,
                                             const Universe& universe, const Model& model) {
  std::vector<NodeStates> states;
  states.reserve(graphs.size());
  for (const auto& g : graphs) states.push_back(forward_ego(g, universe, model.encoder, model.gnn));
  return states;
}

/// phi(u) = f(u) + h^L(u) over a freshly sampled ego graph.
inline Vec phrase_embedding(const Model& model, const Universe& universe, std::uint32_t phrase,
                            const SampleConfig& sampling, std::uint64_t seed) {
  auto ego = sample_ego(universe, phrase, sampling, seed);
  return forward_ego(ego, universe, model.encoder, model.gnn, true).phi();
}

/// Adam with bias correction over the GNN matrices and, when trainable, the
/// encoder table.
class Adam {
 public:
  double lr = 2e-5, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  explicit Adam(double learning_rate) : lr(learning_rate) {}

  std::size_t steps() const { return t_; }

  void step(Model& model, const ModelGrad& grad) {
    if (!init_) {
      m_ = ModelGrad::zeros_like(model.gnn, model.encoder);
      v_ = ModelGrad::zeros_like(model.gnn, model.encoder);
      init_ = true;
    }
    ++t_;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
    auto update = [&](double* w, const double* g, double* m, double* v, long n) {
      for (long i = 0; i < n; ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
        w[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
      }
    };
    for (std::size_t l = 0; l < model.gnn.layers.size(); ++l)
      for (std::size_t r = 0; r < 3; ++r) {
        auto w = model.gnn.layers[l].heads[r].mats();
        auto g = grad.gnn.layers[l].heads[r].mats();
        auto m = m_.gnn.layers[l].heads[r].mats();
        auto v = v_.gnn.layers[l].heads[r].mats();
        for (std::size_t k = 0; k < 4; ++k)
          update(w[k]->data(), g[k]->data(), m[k]->data(), v[k]->data(), w[k]->size());
      }
    if (model.encoder.trainable() && grad.table.size())
      update(model.encoder.table().data(), grad.table.data(), m_.table.data(), v_.table.data(),
             model.encoder.table().size());
  }

 private:
  bool init_ = false;
  std::size_t t_ = 0;
  ModelGrad m_, v_;
};

struct Checkpoint {
  Model model;
  std::size_t step = 0;
  std::optional<Correlations> validation;
};

constexpr const char* kCheckpointMagic = "rasim-checkpoint v1";

namespace detail {

inline std::string encoder_kind_name(EncoderKind k) {
  switch (k) {
    case EncoderKind::HashMean: return "hash_mean";
    case EncoderKind::Precomputed: return "precomputed";
    case EncoderKind::Random: return "random";
  }
  return "?";
}

inline void write_raw(std::ostream& out, const double* data, std::size_t n) {
  static_assert(sizeof(double) == 8);
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * sizeof(double)));
}

inline void read_raw(std::istream& in, double* data, std::size_t n) {
  in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(n * sizeof(double)));
  if (!in) throw DataError("checkpoint: truncated parameter data");
}

}  // namespace detail

/// Header line `rasim-checkpoint v1 key=value ...`, then native-endian
/// doubles: every GNN matrix row-major (layer, relation, q/k/v/s), then the
/// encoder table when it is a hash_mean encoder. Precomputed encoders are
/// not stored; pass them back in on load.
inline void save_checkpoint(const Checkpoint& ck, std::ostream& out) {
  const auto& m = ck.model;
  out << kCheckpointMagic << " dim=" << m.gnn.dim << " layers=" << m.gnn.num_layers()
      << " heads=1 buckets=" << (m.encoder.kind() == EncoderKind::HashMean ? m.encoder.bucket_count() : 0)
      << " encoder=" << detail::encoder_kind_name(m.encoder.kind())
      << " trainable=" << (m.encoder.trainable() ? 1 : 0) << " encoder_seed=" << m.encoder.seed()
      << " step=" << ck.step;
  if (ck.validation)
    out << " val_pearson=" << fmt::format("{:.17g}", ck.validation->pearson)
        << " val_spearman=" << fmt::format("{:.17g}", ck.validation->spearman);
  out << '\n';
  m.gnn.for_each_matrix([&](const Mat& w) {
    RowMat rm = w;
    detail::write_raw(out, rm.data(), static_cast<std::size_t>(rm.size()));
  });
  if (m.encoder.kind() == EncoderKind::HashMean)
    detail::write_raw(out, m.encoder.table().data(), static_cast<std::size_t>(m.encoder.table().size()));
}

inline void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint: " + path.string());
  save_checkpoint(ck, out);
}

inline Checkpoint load_checkpoint(std::istream& in,
                                  const std::optional<TextEncoder>& frozen_encoder = std::nullopt) {
  std::string header;
  if (!std::getline(in, header) || header.rfind(kCheckpointMagic, 0) != 0)
    throw DataError("checkpoint: missing or unsupported version header");
  std::map<std::string, std::string> kv;
  std::istringstream hs(header.substr(std::strlen(kCheckpointMagic)));
  std::string item;
  while (hs >> item) {
    auto eq = item.find('=');
    if (eq == std::string::npos) throw DataError("checkpoint: bad header field " + item);
    kv[item.substr(0, eq)] = item.substr(eq + 1);
  }
  auto get = [&](const std::string& k) {
    if (!kv.count(k)) throw DataError("checkpoint: header lacks " + k);
    return kv[k];
  };
  std::size_t dim = std::stoull(get("dim")), layers = std::stoull(get("layers"));
  if (get("heads") != "1") throw DataError("checkpoint: only single-head attention is supported");
  Checkpoint ck;
  ck.step = std::stoull(get("step"));
  if (kv.count("val_pearson"))
    ck.validation = Correlations{std::stod(kv["val_pearson"]), std::stod(kv["val_spearman"])};
  ck.model.gnn = GnnParams::zeros(dim, layers);
  ck.model.gnn.for_each_matrix([&](Mat& w) {
    RowMat rm(w.rows(), w.cols());
    detail::read_raw(in, rm.data(), static_cast<std::size_t>(rm.size()));
    w = rm;
  });
  auto kind = get("encoder");
  if (kind == "hash_mean") {
    std::size_t buckets = std::stoull(get("buckets"));
    ck.model.encoder = TextEncoder::hash_mean(dim, buckets, 0);
    detail::read_raw(in, ck.model.encoder.table().data(), buckets * dim);
    ck.model.encoder.set_trainable(get("trainable") == "1");
  } else if (kind == "random") {
    ck.model.encoder = TextEncoder::random_fixed(dim, std::stoull(get("encoder_seed")));
  } else if (kind == "precomputed") {
    if (!frozen_encoder) throw DataError("checkpoint uses a precomputed encoder; supply embeddings");
    if (frozen_encoder->dim() != dim) throw DataError("precomputed embeddings have the wrong dimension");
    ck.model.encoder = *frozen_encoder;
  } else {
    throw DataError("checkpoint: unknown encoder kind " + kind);
  }
  return ck;
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path,
                                  const std::optional<TextEncoder>& frozen_encoder = std::nullopt) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path.string());
  return load_checkpoint(in, frozen_encoder);
}

// ---------------------------------------------------------------------------
// Training loops

struct TrainConfig {
  double learning_rate = 2e-5;
  std::size_t batch_size = 4;
  std::size_t max_epochs = 2;
  double alpha = 0.5;
  double margin_r = 0.1;
  double margin_c = 0.1;
  SampleConfig sampling{};
  std::size_t eval_every = 100;
  std::uint64_t seed = 0;
  std::size_t max_steps = 0;          // 0 = no cap
  std::size_t supervised_epochs = 2;  // train_supervised phase 1
  std::size_t total_epochs = 5;       // train_supervised budget
};

/// Phrase pair resolved to universe phrase ids.
struct IndexedPair {
  std::uint32_t a = 0;
  std::uint32_t b = 0;
  double score = 0;
};

struct LogEntry {
  std::size_t step = 0;
  std::size_t epoch = 0;
  std::string phase;
  double total = 0;
  double sum_r = 0;
  double sum_c = 0;
  double supervised = 0;
  std::optional<Correlations> validation;

  std::string format() const {
    std::string s = fmt::format("step={} epoch={} phase={} loss={:.10g} sum_r={:.10g} sum_c={:.10g}",
                                step, epoch, phase, total, sum_r, sum_c);
    if (phase != "self") s += fmt::format(" supervised={:.10g}", supervised);
    if (validation)
      s += fmt::format(" val_pearson={:.10g} val_spearman={:.10g}", validation->pearson,
                       validation->spearman);
    return s;
  }
};

struct TrainResult {
  Checkpoint best;
  Model final_model;
  std::vector<LogEntry> log;
};

inline std::uint64_t eval_seed(std::uint64_t seed) { return hash_combine(seed, fnv1a64("eval")); }

/// Cosine similarity per pair under the model.
inline std::vector<double> predict_pairs(const Model& model, const Universe& universe,
                                         const std::vector<IndexedPair>& pairs,
                                         const SampleConfig& sampling, std::uint64_t seed) {
  std::unordered_map<std::uint32_t, Vec> cache;
  auto phi = [&](std::uint32_t u) -> const Vec& {
    auto it = cache.find(u);
    if (it == cache.end())
      it = cache.emplace(u, phrase_embedding(model, universe, u, sampling, seed)).first;
    return it->second;
  };
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(infer_similarity(phi(p.a), phi(p.b)));
  return out;
}

inline Correlations validate(const Model& model, const Universe& universe,
                             const std::vector<IndexedPair>& pairs, const TrainConfig& cfg) {
  auto pred = predict_pairs(model, universe, pairs, cfg.sampling, eval_seed(cfg.seed));
  std::vector<double> labels;
  for (const auto& p : pairs) labels.push_back(p.score);
  return correlations(pred, labels);
}

namespace detail {

inline void check_finite(double loss, std::size_t step) {
  if (!std::isfinite(loss))
    throw DivergenceError("non-finite loss at step " + std::to_string(step));
}

inline void check_config(const TrainConfig& cfg) {
  if (!(cfg.alpha >= 0.0 && cfg.alpha <= 1.0)) throw ConfigError("alpha must be in [0,1]");
  if (cfg.batch_size < 2) throw ConfigError("batch_size must be >= 2 for in-batch negatives");
  if (cfg.eval_every < 1) throw ConfigError("eval_every must be >= 1");
  if (cfg.learning_rate < 0 || cfg.margin_r < 0 || cfg.margin_c < 0)
    throw ConfigError("learning rate and margins must be non-negative");
}

/// Shared bookkeeping of both loops: step counting, evaluation cadence and
/// best-by-validation-Spearman checkpoint selection.
class Trainer {
 public:
  Trainer(const Universe& universe, Model model, const TrainConfig& cfg,
          const std::vector<IndexedPair>& validation, std::function<void(const LogEntry&)> sink)
      : universe_(universe), cfg_(cfg), validation_(validation), sink_(std::move(sink)),
        adam_(cfg.learning_rate) {
    result_.final_model = std::move(model);
  }

  Model& model() { return result_.final_model; }
  std::size_t step() const { return step_; }
  bool exhausted() const { return cfg_.max_steps && step_ >= cfg_.max_steps; }

  void apply(LogEntry entry, const ModelGrad* grad) {
    check_finite(entry.total, step_ + 1);
    if (grad) adam_.step(result_.final_model, *grad);
    ++step_;
    entry.step = step_;
    evaluated_ = false;
    if (!validation_.empty() && step_ % cfg_.eval_every == 0) evaluate(entry);
    record(std::move(entry));
  }

  TrainResult finish() {
    if (!validation_.empty() && !evaluated_ && step_ > 0) {
      LogEntry e{step_, last_epoch_, "eval", 0, 0, 0, 0, std::nullopt};
      evaluate(e);
      record(std::move(e));
    }
    if (!have_best_) {
      result_.best.model = result_.final_model;
      result_.best.step = step_;
    }
    return std::move(result_);
  }

  void set_epoch(std::size_t e) { last_epoch_ = e; }

 private:
  void evaluate(LogEntry& e) {
    auto c = validate(result_.final_model, universe_, validation_, cfg_);
    e.validation = c;
    evaluated_ = true;
    if (!have_best_ || c.spearman > result_.best.validation->spearman) {
      result_.best.model = result_.final_model;
      result_.best.step = step_;
      result_.best.validation = c;
      have_best_ = true;
    }
  }
  void record(LogEntry e) {
    if (sink_) sink_(e);
    result_.log.push_back(std::move(e));
  }

  const Universe& universe_;
  TrainConfig cfg_;
  const std::vector<IndexedPair>& validation_;
  std::function<void(const LogEntry&)> sink_;
  Adam adam_;
  TrainResult result_;
  std::size_t step_ = 0;
  std::size_t last_epoch_ = 0;
  bool evaluated_ = false;
  bool have_best_ = false;
};

}  // namespace detail

/// Forward + backward of the self-supervised objective on one batch.
/// Returns the loss; gradients are added to `grad` when non-null.
inline BatchLoss self_supervised_step(const TripletBatch& batch, const Universe& universe,
                                      const Model& model, const TrainConfig& cfg,
                                      ModelGrad* grad) {
  auto states = forward_batch(batch.graphs, universe, model);
  std::vector<std::vector<Vec>> d_top;
  if (grad)
    for (const auto& g : batch.graphs)
      d_top.emplace_back(g.nodes.size(), Vec::Zero(static_cast<long>(model.gnn.dim)));
  auto loss = batch_loss(batch, states, cfg.alpha, cfg.margin_r, cfg.margin_c, grad ? &d_top : nullptr);
  if (grad)
    for (std::size_t g = 0; g < states.size(); ++g)
      backward(states[g], model.gnn, model.encoder, d_top[g], {}, *grad);
  return loss;
}

/// Self-supervised training: shuffled phrase batches, Adam, validation every
/// `eval_every` steps (and after the last step), best-by-Spearman checkpoint.
inline TrainResult train(const Universe& universe, Model model, const TrainConfig& cfg,
                         const std::vector<std::uint32_t>& train_phrases,
                         const std::vector<IndexedPair>& validation = {},
                         std::function<void(const LogEntry&)> sink = {}) {
  detail::check_config(cfg);
  if (train_phrases.size() < 2) throw DataError("need at least two training phrases");
  detail::Trainer trainer(universe, std::move(model), cfg, validation, std::move(sink));
  auto grad = ModelGrad::zeros_like(trainer.model().gnn, trainer.model().encoder);
  std::vector<std::uint32_t> order = train_phrases;
  for (std::size_t epoch = 0; epoch < cfg.max_epochs && !trainer.exhausted(); ++epoch) {
    trainer.set_epoch(epoch);
    std::mt19937_64 rng(hash_combine(cfg.seed, hash_combine(fnv1a64("shuffle"), epoch)));
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start + 1 < order.size() && !trainer.exhausted();
         start += cfg.batch_size) {
      std::vector<std::uint32_t> phrases(
          order.begin() + static_cast<long>(start),
          order.begin() + static_cast<long>(std::min(order.size(), start + cfg.batch_size)));
      if (phrases.size() < 2) break;
      auto step_seed = hash_combine(cfg.seed, hash_combine(fnv1a64("batch"), trainer.step()));
      auto batch = build_batch(universe, phrases, cfg.sampling, step_seed);
      grad.set_zero();
      auto loss = self_supervised_step(batch, universe, trainer.model(), cfg, &grad);
      LogEntry e{0, epoch, "self", loss.total, loss.sum_r, loss.sum_c, 0, std::nullopt};
      trainer.apply(std::move(e), batch.empty() ? nullptr : &grad);
    }
  }
  return trainer.finish();
}

/// Gradient of (cos(x, y) - label)^2 / n with respect to x and y.
inline void supervised_grad(const Vec& x, const Vec& y, double label, double scale, Vec& gx,
                            Vec& gy) {
  double nx = x.norm(), ny = y.norm();
  if (nx == 0.0 || ny == 0.0) return;
  double c = x.dot(y) / (nx * ny);
  double dc = 2.0 * (c - label) * scale;
  gx += dc * (y / (nx * ny) - c * x / (nx * nx));
  gy += dc * (x / (nx * ny) - c * y / (ny * ny));
}

/// Mean supervised loss over a batch of pairs, optionally plus the
/// self-supervised objective over the same ego graphs (joint phase).
inline BatchLoss supervised_step(const std::vector<IndexedPair>& pairs, const Universe& universe,
                                 const Model& model, const TrainConfig& cfg, std::uint64_t seed,
                                 bool joint, ModelGrad* grad, double* supervised_part = nullptr) {
  TripletBatch batch;
  std::map<std::uint32_t, std::size_t> slot;
  for (const auto& p : pairs)
    for (auto u : {p.a, p.b})
      if (slot.emplace(u, batch.focal.size()).second) batch.focal.push_back(u);
  for (auto u : batch.focal) batch.graphs.push_back(sample_ego(universe, u, cfg.sampling, seed));
  if (joint && batch.graphs.size() >= 2) add_triplets(batch, seed);

  auto states = forward_batch(batch.graphs, universe, model);
  const long d = static_cast<long>(model.gnn.dim);
  std::vector<Vec> phi(states.size());
  for (std::size_t g = 0; g < states.size(); ++g) phi[g] = states[g].phi();

  std::vector<std::vector<Vec>> d_top, d_in;
  for (const auto& g : batch.graphs) {
    d_top.emplace_back(g.nodes.size(), Vec::Zero(d));
    d_in.emplace_back(g.nodes.size(), Vec::Zero(d));
  }
  std::vector<double> losses;
  const double scale = 1.0 / static_cast<double>(pairs.size());
  for (const auto& p : pairs) {
    auto ga = slot[p.a], gb = slot[p.b];
    losses.push_back(supervised_loss(phi[ga], phi[gb], p.score));
    if (grad) {
      Vec dx = Vec::Zero(d), dy = Vec::Zero(d);
      supervised_grad(phi[ga], phi[gb], p.score, scale, dx, dy);
      auto fa = states[ga].focal_local(), fb = states[gb].focal_local();
      d_top[ga][fa] += dx;
      d_in[ga][fa] += dx;
      d_top[gb][fb] += dy;
      d_in[gb][fb] += dy;
    }
  }
  BatchLoss out;
  double sup = mean_loss(losses);
  if (supervised_part) *supervised_part = sup;
  if (joint && !batch.empty()) {
    auto self = batch_loss(batch, states, cfg.alpha, cfg.margin_r, cfg.margin_c,
                           grad ? &d_top : nullptr);
    out = self;
  }
  out.total += sup;
  if (grad)
    for (std::size_t g = 0; g < states.size(); ++g)
      backward(states[g], model.gnn, model.encoder, d_top[g], d_in[g], *grad);
  return out;
}

/// Supervised schedule: `supervised_epochs` epochs of the MSE objective, then
/// MSE + self-supervised objective (1:1) up to `total_epochs` in all.
inline TrainResult train_supervised(const Universe& universe, Model model, const TrainConfig& cfg,
                                    const std::vector<IndexedPair>& train_pairs,
                                    const std::vector<IndexedPair>& validation = {},
                                    std::function<void(const LogEntry&)> sink = {}) {
  detail::check_config(cfg);
  if (train_pairs.empty()) throw DataError("no labeled training pairs");
  detail::Trainer trainer(universe, std::move(model), cfg, validation, std::move(sink));
  auto grad = ModelGrad::zeros_like(trainer.model().gnn, trainer.model().encoder);
  std::vector<IndexedPair> order = train_pairs;
  for (std::size_t epoch = 0; epoch < cfg.total_epochs && !trainer.exhausted(); ++epoch) {
    trainer.set_epoch(epoch);
    bool joint = epoch >= cfg.supervised_epochs;
    std::mt19937_64 rng(hash_combine(cfg.seed, hash_combine(fnv1a64("pairs"), epoch)));
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size() && !trainer.exhausted();
         start += cfg.batch_size) {
      std::vector<IndexedPair> pairs(
          order.begin() + static_cast<long>(start),
          order.begin() + static_cast<long>(std::min(order.size(), start + cfg.batch_size)));
      auto step_seed = hash_combine(cfg.seed, hash_combine(fnv1a64("batch"), trainer.step()));
      grad.set_zero();
      double sup = 0;
      auto loss = supervised_step(pairs, universe, trainer.model(), cfg, step_seed, joint, &grad, &sup);
      LogEntry e{0, epoch, joint ? "joint" : "supervised", loss.total, loss.sum_r, loss.sum_c, sup,
                 std::nullopt};
      trainer.apply(std::move(e), &grad);
    }
  }
  return trainer.finish();
}

}  // namespace rasim

#endif  // RASIM_TRAINING_HPP
