#ifndef RASIM_PIPELINE_HPP
#define RASIM_PIPELINE_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "rasim/config.hpp"
#include "rasim/corpus.hpp"
#include "rasim/errors.hpp"
#include "rasim/eval.hpp"
#include "rasim/pairs.hpp"
#include "rasim/phrasegen.hpp"
#include "rasim/retrieval.hpp"
#include "rasim/training.hpp"
#include "rasim/universe.hpp"

namespace rasim {

enum class Stage { Ingest = 0, Phrases, Index, Universe, Train, Eval };

inline constexpr std::array<const char*, 6> kStageNames = {"ingest", "phrases", "index",
                                                           "universe", "train", "eval"};

inline const char* stage_name(Stage s) { return kStageNames[static_cast<std::size_t>(s)]; }

inline Stage parse_stage(const std::string& name) {
  for (std::size_t i = 0; i < kStageNames.size(); ++i)
    if (name == kStageNames[i]) return static_cast<Stage>(i);
  throw ConfigError("unknown stage: " + name);
}

struct StageOutcome {
  Stage stage;
  bool ran = false;
  std::uint64_t hash = 0;
};

struct PipelineResult {
  std::vector<StageOutcome> stages;
  std::optional<nlohmann::json> report;
};

namespace detail {

inline std::string hex64(std::uint64_t v) { return fmt::format("{:016x}", v); }

inline std::uint64_t file_hash(const std::string& path) {
  if (path.empty()) return fnv1a64("<none>");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return fnv1a64(ss.str());
}

template <typename... Ts>
std::uint64_t hash_fields(std::uint64_t h, const Ts&... xs) {
  ((h = hash_combine(h, fnv1a64(fmt::format("{}", xs)))), ...);
  return h;
}

// Rethrows with the stage named, keeping the error category (and so the exit code).
template <typename F>
auto in_stage(Stage s, F&& f) -> decltype(f()) {
  auto prefix = std::string("stage ") + stage_name(s) + ": ";
  try {
    return f();
  } catch (const ConfigError& e) {
    throw ConfigError(prefix + e.what());
  } catch (const DivergenceError& e) {
    throw DivergenceError(prefix + e.what());
  } catch (const DataError& e) {
    throw DataError(prefix + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(prefix + e.what());
  }
}

}  // namespace detail

/// Artifact locations inside the work directory.
struct ArtifactPaths {
  std::filesystem::path dir;

  std::filesystem::path corpus() const { return dir / "corpus.jsonl"; }
  std::filesystem::path stats() const { return dir / "corpus_stats.json"; }
  std::filesystem::path phrases() const { return dir / "phrases.tsv"; }
  std::filesystem::path index() const { return dir / "index.bm25"; }
  std::filesystem::path universe() const { return dir / "universe"; }
  std::filesystem::path checkpoint() const { return dir / "model.ckpt"; }
  std::filesystem::path train_log() const { return dir / "train.log"; }
  std::filesystem::path report_json() const { return dir / "report.json"; }
  std::filesystem::path report_text() const { return dir / "report.txt"; }
  std::filesystem::path stamp(Stage s) const {
    return dir / (std::string(stage_name(s)) + ".stamp");
  }
};

/// Per-stage content hashes. Each stage hash folds in its predecessor's, so a
/// change anywhere re-runs that stage and every later one.
inline std::array<std::uint64_t, 6> stage_hashes(const PipelineConfig& c) {
  using detail::file_hash;
  using detail::hash_fields;
  std::array<std::uint64_t, 6> h{};
  h[0] = hash_fields(fnv1a64("ingest"), file_hash(c.corpus));
  h[1] = hash_fields(h[0], "phrases", c.top_m, c.min_freq, c.normalize, file_hash(c.stopwords));
  h[2] = hash_fields(h[1], "index", Bm25Params{}.k1, Bm25Params{}.b);
  h[3] = hash_fields(h[2], "universe", c.k);
  h[4] = hash_fields(h[3], "train", c.dim, c.bucket_count, c.layers, c.iterations, c.fanout_r,
                     c.fanout_c, format_double(c.learning_rate), c.batch_size, c.max_epochs,
                     format_double(c.alpha), format_double(c.margin_r), format_double(c.margin_c),
                     c.eval_every, c.max_steps, c.supervised, c.supervised_epochs, c.total_epochs,
                     c.seed, file_hash(c.validation_pairs),
                     c.supervised ? file_hash(c.train_pairs) : fnv1a64("<unused>"));
  h[5] = hash_fields(h[4], "eval", file_hash(c.test_pairs),
                     detail::format_value(c.effective_eval_seeds()));
  return h;
}

/// Runs ingest -> phrases -> index -> universe -> train -> eval up to `last`,
/// skipping stages whose stamp matches the current stage hash.
class Pipeline {
 public:
  explicit Pipeline(PipelineConfig cfg) : cfg_(std::move(cfg)), paths_{cfg_.work_dir} {}

  const ArtifactPaths& paths() const { return paths_; }
  const PipelineConfig& config() const { return cfg_; }

  PipelineResult run(Stage last = Stage::Eval, bool force = false) {
    validate_config(cfg_, true);
    std::filesystem::create_directories(paths_.dir);
    auto hashes = detail::in_stage(Stage::Ingest, [&] { return stage_hashes(cfg_); });
    PipelineResult result;
    bool dirty = force;
    for (std::size_t i = 0; i <= static_cast<std::size_t>(last); ++i) {
      auto s = static_cast<Stage>(i);
      StageOutcome o{s, false, hashes[i]};
      if (s == Stage::Eval && cfg_.test_pairs.empty()) {
        spdlog::info("stage eval: no test_pairs configured, nothing to do");
        result.stages.push_back(o);
        continue;
      }
      dirty = dirty || !stamp_matches(s, hashes[i]);
      if (dirty) {
        spdlog::info("stage {}: running", stage_name(s));
        detail::in_stage(s, [&] { run_stage(s); });
        write_stamp(s, hashes[i]);
        o.ran = true;
      } else {
        spdlog::info("stage {}: up to date, skipped", stage_name(s));
      }
      result.stages.push_back(o);
    }
    if (last == Stage::Eval && std::filesystem::exists(paths_.report_json())) {
      std::ifstream in(paths_.report_json());
      result.report = nlohmann::json::parse(in);
    }
    return result;
  }

  // Artifact loaders, usable once the corresponding stage has run.
  Corpus load_corpus() const { return ingest_corpus(paths_.corpus()); }
  PhraseSet load_phrases() const { return read_phrase_set(paths_.phrases()); }
  InvertedIndex load_index() const { return InvertedIndex::load(paths_.index()); }
  Universe load_universe(const Corpus& corpus) const {
    return Universe::load(paths_.universe(), corpus);
  }
  Checkpoint load_model() const { return load_checkpoint(paths_.checkpoint()); }

  /// Pair files resolved to phrase ids. Train and validation phrases are
  /// always added first, in that order, so node ids do not depend on which
  /// stages ran in this process.
  struct PairSets {
    std::vector<PhrasePair> train, validation, test;
    std::vector<IndexedPair> train_ids, validation_ids, test_ids;
  };
  PairSets attach_pairs(Universe& u, const InvertedIndex& index, bool with_test) const {
    PairSets ps;
    auto read = [&](const std::string& path) {
      return path.empty() ? std::vector<PhrasePair>{}
                          : normalize_pairs(read_pairs(path), cfg_.normalize);
    };
    if (cfg_.supervised) ps.train = read(cfg_.train_pairs);
    ps.validation = read(cfg_.validation_pairs);
    ps.train_ids = index_pairs(u, index, ps.train);
    ps.validation_ids = index_pairs(u, index, ps.validation);
    if (with_test) {
      ps.test = read(cfg_.test_pairs);
      ps.test_ids = index_pairs(u, index, ps.test);
    }
    return ps;
  }

 private:
  bool stamp_matches(Stage s, std::uint64_t hash) const {
    std::ifstream in(paths_.stamp(s));
    std::string line;
    return in && std::getline(in, line) && line == stamp_line(s, hash);
  }
  std::string stamp_line(Stage s, std::uint64_t hash) const {
    return fmt::format("stage={} hash={}", stage_name(s), detail::hex64(hash));
  }
  void write_stamp(Stage s, std::uint64_t hash) const {
    std::ofstream out(paths_.stamp(s));
    out << stamp_line(s, hash) << "\nconfig=" << detail::hex64(cfg_.hash()) << '\n';
  }

  void run_stage(Stage s) {
    switch (s) {
      case Stage::Ingest: return ingest();
      case Stage::Phrases: return phrases();
      case Stage::Index: return index();
      case Stage::Universe: return universe();
      case Stage::Train: return train_model();
      case Stage::Eval: return eval();
    }
  }

  void ingest() {
    if (cfg_.corpus.empty()) throw ConfigError("no corpus path configured");
    IngestReport rep;
    auto corpus = ingest_corpus(cfg_.corpus, &rep);
    write_corpus(corpus, paths_.corpus());
    std::ofstream(paths_.stats()) << to_json(corpus_stats(corpus)).dump(2) << '\n';
  }

  void phrases() {
    auto corpus = load_corpus();
    auto stop = cfg_.stopwords.empty() ? default_stopwords() : load_stopwords(cfg_.stopwords);
    PhraseSetOptions opts;
    opts.top_m = cfg_.top_m;
    opts.min_freq = cfg_.min_freq;
    opts.normalize = cfg_.normalize;
    auto set = build_phrase_set(corpus, stop, opts);
    if (set.empty()) throw DataError("no phrase reaches min_freq = " + std::to_string(cfg_.min_freq));
    write_phrase_set(set, paths_.phrases());
  }

  void index() { build_index(load_corpus()).save(paths_.index()); }

  void universe() {
    auto corpus = load_corpus();
    build_universe(corpus, load_phrases(), load_index(), cfg_.k).save(paths_.universe());
  }

  void train_model() {
    auto corpus = load_corpus();
    auto idx = load_index();
    auto u = load_universe(corpus);
    std::vector<std::uint32_t> train_phrases(u.phrase_count());
    for (std::uint32_t i = 0; i < train_phrases.size(); ++i) train_phrases[i] = i;
    auto ps = attach_pairs(u, idx, false);
    auto model = Model::init(cfg_.dim, cfg_.bucket_count, cfg_.layers, cfg_.seed);
    std::ofstream log(paths_.train_log());
    auto sink = [&](const LogEntry& e) { log << e.format() << '\n'; };
    auto tc = cfg_.train_config();
    auto res = cfg_.supervised
                   ? train_supervised(u, std::move(model), tc, ps.train_ids, ps.validation_ids, sink)
                   : train(u, std::move(model), tc, train_phrases, ps.validation_ids, sink);
    save_checkpoint(res.best, paths_.checkpoint());
  }

  void eval() {
    auto corpus = load_corpus();
    auto idx = load_index();
    auto u = load_universe(corpus);
    auto ps = attach_pairs(u, idx, true);
    auto ck = load_model();
    std::vector<EvalReport> rows;
    nlohmann::json j;
    j["config_hash"] = detail::hex64(cfg_.hash());
    j["checkpoint_step"] = ck.step;
    std::string text = fmt::format("config {}\ncheckpoint step {}\n", detail::hex64(cfg_.hash()), ck.step);
    for (auto s : cfg_.effective_eval_seeds()) {
      rows.push_back(evaluate(ck.model, u, idx, ps.test, cfg_.sampling(), s));
      auto row = to_json(rows.back());
      row["seed"] = s;
      j["seeds"].push_back(row);
      text += format_report_row("seed " + std::to_string(s), rows.back()) + "\n";
    }
    auto mean = mean_report(rows);
    j["mean"] = to_json(mean);
    text += format_report_row("mean", mean) + "\n";
    auto initial = Model::init(cfg_.dim, cfg_.bucket_count, cfg_.layers, cfg_.seed);
    auto enc = evaluate_encoder_only(initial.encoder, ps.test);
    j["encoder_only"] = to_json(enc);
    text += format_report_row("encoder", enc) + "\n";
    std::ofstream(paths_.report_json()) << j.dump(2) << '\n';
    std::ofstream(paths_.report_text()) << text;
  }

  PipelineConfig cfg_;
  ArtifactPaths paths_;
};

inline PipelineResult run_pipeline(const PipelineConfig& cfg, Stage last = Stage::Eval,
                                   bool force = false) {
  return Pipeline(cfg).run(last, force);
}

}  // namespace rasim

#endif  // RASIM_PIPELINE_HPP
