// rasim: command-line front end for the retrieval-augmented phrase
// similarity pipeline.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "rasim/rasim.hpp"
#include "rasim/synthetic.hpp"

namespace fs = std::filesystem;
using namespace rasim;

namespace {

struct Globals {
  std::string config_path;
  std::optional<std::size_t> seed;
  bool verbose = false;
  bool allow_offgrid = false;
  std::vector<std::string> overrides;
};

PipelineConfig effective_config(const Globals& g) {
  PipelineConfig cfg;
  if (!g.config_path.empty()) cfg = load_config(g.config_path, true);
  for (const auto& kv : g.overrides) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got " + kv);
    set_config_value(cfg, trim(kv.substr(0, eq)), kv.substr(eq + 1));
  }
  if (g.seed) cfg.seed = *g.seed;
  validate_config(cfg, g.allow_offgrid);
  return cfg;
}

void print_stages(const PipelineResult& r) {
  for (const auto& s : r.stages)
    fmt::print("{:<9} {} {}\n", stage_name(s.stage), s.ran ? "ran    " : "skipped",
               detail::hex64(s.hash));
}

void write_json(const std::string& path, const nlohmann::json& j) {
  if (path.empty()) return;
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << j.dump(2) << '\n';
}

std::vector<std::size_t> parse_seeds(const std::string& s) {
  PipelineConfig tmp;
  set_config_value(tmp, "eval_seeds", s);
  return tmp.eval_seeds;
}

int run(int argc, char** argv) {
  CLI::App app{"Retrieval-augmented patent phrase similarity"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "Flat key = value configuration file");
  app.add_option("--seed", g.seed, "Root seed (overrides the config)");
  app.add_flag("--verbose,-v", g.verbose, "Debug logging");
  app.add_flag("--allow-offgrid", g.allow_offgrid, "Accept values outside the tuning grids");
  app.add_option("--set", g.overrides, "Override a config key (key=value), repeatable");

  std::function<int()> action;

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Read the corpus and report token statistics");
  std::string corpus_path, stats_json;
  ingest->add_option("--corpus", corpus_path, "Line-delimited JSON corpus");
  ingest->add_option("--json", stats_json, "Also write statistics as JSON");
  ingest->callback([&] {
    action = [&] {
      auto cfg = effective_config(g);
      if (!corpus_path.empty()) cfg.corpus = corpus_path;
      Pipeline p(cfg);
      p.run(Stage::Ingest);
      auto corpus = p.load_corpus();
      auto stats = corpus_stats(corpus);
      fmt::print("patents = {}\ncitations = {}\n", corpus.size(), corpus.citations.size());
      for (auto& [k, v] : to_json(stats).items()) fmt::print("tokens_{} = {}\n", k, v.dump());
      write_json(stats_json, to_json(stats));
      return 0;
    };
  });

  // phrases
  auto* phrases = app.add_subcommand("phrases", "Extract the RAKE phrase set");
  std::optional<std::size_t> top_m, min_freq;
  bool normalize = false;
  std::string stopwords;
  phrases->add_option("--top-m", top_m, "Top RAKE candidates kept per document");
  phrases->add_option("--min-freq", min_freq, "Minimum document frequency");
  phrases->add_flag("--normalize", normalize, "Rule-based plural stripping");
  phrases->add_option("--stopwords", stopwords, "Stopword list, one per line");
  phrases->callback([&] {
    action = [&] {
      auto cfg = effective_config(g);
      if (top_m) cfg.top_m = *top_m;
      if (min_freq) cfg.min_freq = *min_freq;
      if (normalize) cfg.normalize = true;
      if (!stopwords.empty()) cfg.stopwords = stopwords;
      Pipeline p(cfg);
      p.run(Stage::Phrases);
      auto set = p.load_phrases();
      fmt::print("phrases = {}\nfile = {}\n", set.size(), p.paths().phrases().string());
      return 0;
    };
  });

  // index
  auto* index = app.add_subcommand("index", "BM25 index");
  index->require_subcommand(1);
  auto* index_build = index->add_subcommand("build", "Build and persist the index");
  index_build->callback([&] {
    action = [&] {
      Pipeline p(effective_config(g));
      p.run(Stage::Index);
      auto idx = p.load_index();
      fmt::print("documents = {}\nterms = {}\nfile = {}\n", idx.doc_count(), idx.term_count(),
                 p.paths().index().string());
      return 0;
    };
  });
  auto* index_query = index->add_subcommand("query", "Top-k documents for a phrase");
  std::string query_phrase;
  std::size_t query_k = 5;
  index_query->add_option("--phrase", query_phrase)->required();
  index_query->add_option("--k", query_k);
  index_query->callback([&] {
    action = [&] {
      Pipeline p(effective_config(g));
      auto idx = p.load_index();
      auto hits = idx.search(tokenize(query_phrase), query_k);
      for (std::size_t r = 0; r < hits.size(); ++r)
        fmt::print("{}\t{}\t{}\n", r + 1, idx.doc_ids()[hits[r].doc], format_double(hits[r].score));
      return 0;
    };
  });

  // universe
  auto* universe = app.add_subcommand("universe", "Patent-phrase universe");
  universe->require_subcommand(1);
  auto* universe_build = universe->add_subcommand("build", "Build and persist the universe");
  std::optional<std::size_t> universe_k;
  universe_build->add_option("--k", universe_k, "Patents retrieved per phrase");
  universe_build->callback([&] {
    action = [&] {
      auto cfg = effective_config(g);
      if (universe_k) cfg.k = *universe_k;
      validate_config(cfg, g.allow_offgrid);
      Pipeline p(cfg);
      p.run(Stage::Universe);
      auto u = p.load_universe(p.load_corpus());
      fmt::print("phrases = {}\npatents = {}\nretrieval_edges = {}\ncitation_edges = {}\nisolated = {}\n",
                 u.phrase_count(), u.patent_count(), u.retrieval_edge_count(),
                 u.citation_edge_count(), u.isolated_count());
      return 0;
    };
  });
  auto* universe_ego = universe->add_subcommand("ego", "Sample and print an ego graph");
  std::string ego_phrase;
  int ego_iters = 2;
  std::size_t ego_fanout = 5, ego_seed = 0;
  universe_ego->add_option("--phrase", ego_phrase)->required();
  universe_ego->add_option("--iters", ego_iters);
  universe_ego->add_option("--fanout", ego_fanout);
  universe_ego->add_option("--seed", ego_seed);
  universe_ego->callback([&] {
    action = [&] {
      auto cfg = effective_config(g);
      Pipeline p(cfg);
      auto corpus = p.load_corpus();
      auto idx = p.load_index();
      auto u = p.load_universe(corpus);
      auto focal = u.add_phrase(normalize_phrase(ego_phrase, cfg.normalize), idx);
      auto ego = sample_ego(u, focal, {ego_iters, ego_fanout, ego_fanout}, ego_seed);
      fmt::print("nodes = {}\nretrieval_edges = {}\ncitation_edges = {}\n", ego.nodes.size(),
                 ego.retrieval_edges.size(), ego.citation_edges.size());
      std::cout << to_dot(ego, u);
      return 0;
    };
  });

  // train / train-supervised
  auto* train_cmd = app.add_subcommand("train", "Self-supervised training");
  train_cmd->callback([&] {
    action = [&] {
      auto cfg = effective_config(g);
      cfg.supervised = false;
      Pipeline p(cfg);
      print_stages(p.run(Stage::Train));
      fmt::print("checkpoint = {}\nlog = {}\n", p.paths().checkpoint().string(),
                 p.paths().train_log().string());
      return 0;
    };
  });
  auto* train_sup = app.add_subcommand("train-supervised", "Supervised then joint training");
  std::string sup_pairs;
  train_sup->add_option("--pairs", sup_pairs, "Labeled training pairs")->required();
  train_sup->callback([&] {
    action = [&] {
      auto cfg = effective_config(g);
      cfg.supervised = true;
      cfg.train_pairs = sup_pairs;
      Pipeline p(cfg);
      print_stages(p.run(Stage::Train));
      fmt::print("checkpoint = {}\nlog = {}\n", p.paths().checkpoint().string(),
                 p.paths().train_log().string());
      return 0;
    };
  });

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Correlation and alignment/uniformity report");
  std::string eval_ckpt, eval_pairs, eval_seeds, eval_json;
  eval_cmd->add_option("--checkpoint", eval_ckpt)->required();
  eval_cmd->add_option("--pairs", eval_pairs)->required();
  eval_cmd->add_option("--seeds", eval_seeds, "Comma-separated sampling seeds");
  eval_cmd->add_option("--json", eval_json, "Also write the report as JSON");
  eval_cmd->callback([&] {
    action = [&] {
      auto cfg = effective_config(g);
      Pipeline p(cfg);
      auto corpus = p.load_corpus();
      auto idx = p.load_index();
      auto u = p.load_universe(corpus);
      p.attach_pairs(u, idx, false);
      auto pairs = normalize_pairs(read_pairs(eval_pairs), cfg.normalize);
      index_pairs(u, idx, pairs);
      auto ck = load_checkpoint(eval_ckpt);
      auto seeds = eval_seeds.empty() ? cfg.effective_eval_seeds() : parse_seeds(eval_seeds);
      std::vector<EvalReport> rows;
      nlohmann::json j;
      for (auto s : seeds) {
        rows.push_back(evaluate(ck.model, u, idx, pairs, cfg.sampling(), s));
        fmt::print("{}\n", format_report_row("seed " + std::to_string(s), rows.back()));
        auto row = to_json(rows.back());
        row["seed"] = s;
        j["seeds"].push_back(row);
      }
      auto mean = mean_report(rows);
      fmt::print("{}\n", format_report_row("mean", mean));
      j["mean"] = to_json(mean);
      std::cout << j.dump(2) << '\n';
      write_json(eval_json, j);
      return 0;
    };
  });

  // query
  auto* query = app.add_subcommand("query", "Nearest phrases to a query phrase");
  std::string q_ckpt, q_phrase, q_candidates;
  std::size_t q_top = 5;
  query->add_option("--checkpoint", q_ckpt)->required();
  query->add_option("--phrase", q_phrase)->required();
  query->add_option("--top", q_top);
  query->add_option("--candidates", q_candidates,
                    "Pair file whose phrases are the candidates (default: test_pairs)");
  query->callback([&] {
    action = [&] {
      auto cfg = effective_config(g);
      Pipeline p(cfg);
      auto corpus = p.load_corpus();
      auto idx = p.load_index();
      auto u = p.load_universe(corpus);
      p.attach_pairs(u, idx, false);
      std::vector<std::string> cands;
      auto cand_file = q_candidates.empty() ? cfg.test_pairs : q_candidates;
      if (!cand_file.empty())
        cands = pair_vocabulary(normalize_pairs(read_pairs(cand_file), cfg.normalize));
      else
        cands = p.load_phrases().texts();
      if (cands.empty()) throw DataError("no candidate phrases");
      auto ck = load_checkpoint(q_ckpt);
      auto q = normalize_phrase(q_phrase, cfg.normalize);
      auto seed = eval_seed(cfg.seed);
      auto qvec = phrase_embedding(ck.model, u, u.add_phrase(q, idx), cfg.sampling(), seed);
      auto emb = model_embeddings(ck.model, u, idx, cands, cfg.sampling(), seed);
      auto hits = query_neighbors(q, qvec, emb, q_top);
      for (std::size_t r = 0; r < hits.size(); ++r)
        fmt::print("{}\t{:.6f}\t{}\n", r + 1, hits[r].similarity, hits[r].phrase);
      return 0;
    };
  });

  // baseline
  auto* baseline = app.add_subcommand("baseline", "RetrieveAvg and Graph-Only baselines");
  baseline->require_subcommand(1);
  auto* ra = baseline->add_subcommand("retrieveavg", "Weighted phrase/top-1 patent average");
  std::string ra_val, ra_test;
  ra->add_option("--pairs", ra_val, "Validation pairs for the weight grid search")->required();
  ra->add_option("--test", ra_test, "Test pairs")->required();
  ra->callback([&] {
    action = [&] {
      auto cfg = effective_config(g);
      Pipeline p(cfg);
      p.run(Stage::Index);
      auto corpus = p.load_corpus();
      auto idx = p.load_index();
      auto enc = init_encoder(cfg.dim, cfg.bucket_count, hash_combine(cfg.seed, fnv1a64("encoder")));
      RetrieveAvg model(enc, idx, corpus);
      auto val = normalize_pairs(read_pairs(ra_val), cfg.normalize);
      auto test = normalize_pairs(read_pairs(ra_test), cfg.normalize);
      auto grid = model.grid_search(val);
      for (auto [w, s] : grid.curve) fmt::print("w={:.1f} validation_spearman={:.6f}\n", w, s);
      auto r = evaluate_embeddings(model.embed_all(pair_vocabulary(test), grid.weight), test);
      fmt::print("weight = {:.1f}\n{}\n", grid.weight, format_report_row("retrieveavg", r));
      return 0;
    };
  });
  auto* go = baseline->add_subcommand("graphonly", "Random frozen node features");
  go->callback([&] {
    action = [&] {
      auto cfg = effective_config(g);
      Pipeline p(cfg);
      p.run(Stage::Universe);
      auto corpus = p.load_corpus();
      auto idx = p.load_index();
      auto u = p.load_universe(corpus);
      std::vector<std::uint32_t> train_phrases(u.phrase_count());
      for (std::uint32_t i = 0; i < train_phrases.size(); ++i) train_phrases[i] = i;
      auto ps = p.attach_pairs(u, idx, true);
      if (ps.test.empty()) throw ConfigError("graphonly needs test_pairs");
      auto res = graph_only_baseline(u, cfg.dim, cfg.layers, cfg.train_config(), train_phrases,
                                     ps.validation_ids);
      std::vector<EvalReport> rows;
      for (auto s : cfg.effective_eval_seeds())
        rows.push_back(evaluate(res.best.model, u, idx, ps.test, cfg.sampling(), s));
      fmt::print("{}\n", format_report_row("graphonly", mean_report(rows)));
      return 0;
    };
  });

  // pipeline
  auto* pipe = app.add_subcommand("pipeline", "Run every stage, skipping up-to-date ones");
  std::string until = "eval";
  bool force = false;
  pipe->add_option("--until", until, "Last stage to run");
  pipe->add_flag("--force", force, "Re-run every stage");
  pipe->callback([&] {
    action = [&] {
      auto cfg = effective_config(g);
      spdlog::info("effective configuration:\n{}", cfg.describe());
      auto r = run_pipeline(cfg, parse_stage(until), force);
      print_stages(r);
      if (r.report) {
        std::ifstream in(Pipeline(cfg).paths().report_text());
        std::cout << in.rdbuf();
      }
      return 0;
    };
  });

  // config
  auto* show = app.add_subcommand("config", "Print the effective configuration");
  show->callback([&] {
    action = [&] {
      std::cout << effective_config(g).describe();
      return 0;
    };
  });

  // synth
  auto* synth = app.add_subcommand("synth", "Write the clustered synthetic fixture");
  std::string synth_out = "synthetic";
  std::size_t synth_seed = 7;
  synth->add_option("--out", synth_out, "Output directory");
  synth->add_option("--fixture-seed", synth_seed);
  synth->callback([&] {
    action = [&] {
      synthetic::Spec spec;
      spec.seed = synth_seed;
      auto fx = synthetic::generate(spec);
      fs::create_directories(synth_out);
      fs::path dir(synth_out);
      write_corpus(fx.corpus, dir / "corpus.jsonl");
      write_pairs(fx.train, dir / "train.csv");
      write_pairs(fx.validation, dir / "validation.csv");
      write_pairs(fx.test, dir / "test.csv");
      std::ofstream cfg(dir / "rasim.conf");
      cfg << "corpus = corpus.jsonl\nwork_dir = work\ntrain_pairs = train.csv\n"
             "validation_pairs = validation.csv\ntest_pairs = test.csv\nmin_freq = 5\n"
             "learning_rate = 2e-4\nseed = 1\n";
      fmt::print("wrote {} patents and {}/{}/{} pairs to {}\n", fx.corpus.size(), fx.train.size(),
                 fx.validation.size(), fx.test.size(), synth_out);
      return 0;
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }
  auto logger = spdlog::stderr_color_mt("rasim");
  spdlog::set_default_logger(logger);
  spdlog::set_level(g.verbose ? spdlog::level::debug : spdlog::level::warn);
  return action ? action() : 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ConfigError& e) {
    spdlog::error("{}", e.what());
    return 1;
  } catch (const DivergenceError& e) {
    spdlog::error("{}", e.what());
    return 3;
  } catch (const DataError& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const ShapeError& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 2;
  }
}
