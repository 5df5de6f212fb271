#ifndef RASIM_CONFIG_HPP
#define RASIM_CONFIG_HPP

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rasim/errors.hpp"
#include "rasim/retrieval.hpp"
#include "rasim/text.hpp"
#include "rasim/training.hpp"

namespace rasim {

/// Everything a pipeline run needs. Keys in a config file use the member
/// names below; `describe()` prints the same `key = value` form.
struct PipelineConfig {
  // paths
  std::string corpus;
  std::string work_dir = "rasim-work";
  std::string stopwords;
  std::string train_pairs;
  std::string validation_pairs;
  std::string test_pairs;

  // phrases
  std::size_t top_m = 3;
  std::size_t min_freq = 25;
  bool normalize = false;

  // retrieval and sampling
  std::size_t k = 5;
  std::size_t iterations = 2;
  std::size_t fanout_r = 5;
  std::size_t fanout_c = 5;

  // model
  std::size_t dim = 64;
  std::size_t bucket_count = 65536;
  std::size_t layers = 2;

  // training
  double learning_rate = 2e-5;
  std::size_t batch_size = 4;
  std::size_t max_epochs = 2;
  double alpha = 0.5;
  double margin_r = 0.1;
  double margin_c = 0.1;
  std::size_t eval_every = 100;
  std::size_t max_steps = 0;
  bool supervised = false;
  std::size_t supervised_epochs = 2;
  std::size_t total_epochs = 5;

  // evaluation
  std::vector<std::size_t> eval_seeds;  // empty: {seed}

  std::size_t seed = 0;

  TrainConfig train_config() const {
    TrainConfig t;
    t.learning_rate = learning_rate;
    t.batch_size = batch_size;
    t.max_epochs = max_epochs;
    t.alpha = alpha;
    t.margin_r = margin_r;
    t.margin_c = margin_c;
    t.sampling = sampling();
    t.eval_every = eval_every;
    t.seed = seed;
    t.max_steps = max_steps;
    t.supervised_epochs = supervised_epochs;
    t.total_epochs = total_epochs;
    return t;
  }
  SampleConfig sampling() const { return {static_cast<int>(iterations), fanout_r, fanout_c}; }
  std::vector<std::size_t> effective_eval_seeds() const {
    return eval_seeds.empty() ? std::vector<std::size_t>{seed} : eval_seeds;
  }

  std::string describe() const;
  /// Hash of every key except work_dir, so a run's provenance does not
  /// depend on where its artifacts are written.
  std::uint64_t hash() const;
};

namespace detail {

inline std::string format_value(std::size_t v) { return std::to_string(v); }
inline std::string format_value(double v) { return format_double(v); }
inline std::string format_value(bool v) { return v ? "true" : "false"; }
inline std::string format_value(const std::string& v) { return v; }
inline std::string format_value(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

template <typename T>
T parse_integer(const std::string& key, std::string_view s) {
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigError(key + ": expected a non-negative integer, got '" + std::string(s) + "'");
  return v;
}

inline void parse_value(const std::string& key, std::string_view s, std::size_t& out) {
  out = parse_integer<std::size_t>(key, s);
}
inline void parse_value(const std::string& key, std::string_view s, double& out) {
  try {
    out = parse_double(s);
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + std::string(s) + "'");
  }
}
inline void parse_value(const std::string& key, std::string_view s, bool& out) {
  if (s == "true" || s == "1" || s == "yes") out = true;
  else if (s == "false" || s == "0" || s == "no") out = false;
  else throw ConfigError(key + ": expected true or false, got '" + std::string(s) + "'");
}
inline void parse_value(const std::string&, std::string_view s, std::string& out) { out = std::string(s); }
inline void parse_value(const std::string& key, std::string_view s, std::vector<std::size_t>& out) {
  out.clear();
  std::string item;
  std::istringstream in{std::string(s)};
  while (std::getline(in, item, ','))
    out.push_back(parse_integer<std::size_t>(key, trim(item)));
}

struct Field {
  std::string key;
  std::function<std::string(const PipelineConfig&)> get;
  std::function<void(PipelineConfig&, std::string_view)> set;
  std::function<bool(const PipelineConfig&)> on_grid;  // empty: no grid
};

template <typename T>
Field field(const char* key, T PipelineConfig::*m) {
  return {key, [m](const PipelineConfig& c) { return format_value(c.*m); },
          [m, key](PipelineConfig& c, std::string_view s) { parse_value(key, s, c.*m); }, {}};
}

template <typename T>
Field grid_field(const char* key, T PipelineConfig::*m, std::vector<T> grid) {
  auto f = field(key, m);
  f.on_grid = [m, grid](const PipelineConfig& c) {
    return std::find(grid.begin(), grid.end(), c.*m) != grid.end();
  };
  return f;
}

inline const std::vector<Field>& fields() {
  using C = PipelineConfig;
  static const std::vector<Field> all = {
      field("corpus", &C::corpus),
      field("work_dir", &C::work_dir),
      field("stopwords", &C::stopwords),
      field("train_pairs", &C::train_pairs),
      field("validation_pairs", &C::validation_pairs),
      field("test_pairs", &C::test_pairs),
      field("top_m", &C::top_m),
      field("min_freq", &C::min_freq),
      field("normalize", &C::normalize),
      grid_field<std::size_t>("k", &C::k, {3, 5, 7, 50}),
      grid_field<std::size_t>("iterations", &C::iterations, {1, 2, 3}),
      grid_field<std::size_t>("fanout_r", &C::fanout_r, {1, 3, 5}),
      grid_field<std::size_t>("fanout_c", &C::fanout_c, {1, 3, 5}),
      field("dim", &C::dim),
      field("bucket_count", &C::bucket_count),
      grid_field<std::size_t>("layers", &C::layers, {1, 2, 3}),
      grid_field<double>("learning_rate", &C::learning_rate, {2e-6, 2e-5, 2e-4}),
      grid_field<std::size_t>("batch_size", &C::batch_size, {2, 4, 6, 8}),
      field("max_epochs", &C::max_epochs),
      field("alpha", &C::alpha),
      grid_field<double>("margin_r", &C::margin_r, {0.01, 0.02, 0.05, 0.1, 0.2, 0.5}),
      grid_field<double>("margin_c", &C::margin_c, {0.01, 0.02, 0.05, 0.1, 0.2, 0.5}),
      field("eval_every", &C::eval_every),
      field("max_steps", &C::max_steps),
      field("supervised", &C::supervised),
      field("supervised_epochs", &C::supervised_epochs),
      field("total_epochs", &C::total_epochs),
      field("eval_seeds", &C::eval_seeds),
      field("seed", &C::seed),
  };
  return all;
}

inline const Field* find_field(std::string_view key) {
  for (const auto& f : fields())
    if (f.key == key) return &f;
  return nullptr;
}

}  // namespace detail

inline std::string PipelineConfig::describe() const {
  std::string out;
  for (const auto& f : detail::fields()) out += f.key + " = " + f.get(*this) + "\n";
  return out;
}

inline std::uint64_t PipelineConfig::hash() const {
  std::string out;
  for (const auto& f : detail::fields())
    if (f.key != "work_dir") out += f.key + " = " + f.get(*this) + "\n";
  return fnv1a64(out);
}

/// Sets one key from its textual value; unknown keys are a ConfigError.
inline void set_config_value(PipelineConfig& cfg, std::string_view key, std::string_view value) {
  const auto* f = detail::find_field(key);
  if (!f) throw ConfigError("unknown config key: " + std::string(key));
  f->set(cfg, trim(value));
}

/// Range checks always apply; grid membership only unless `allow_offgrid`.
inline void validate_config(const PipelineConfig& c, bool allow_offgrid = false) {
  auto fail = [](const std::string& m) { throw ConfigError(m); };
  if (!(c.alpha >= 0.0 && c.alpha <= 1.0)) fail("alpha must lie in [0, 1]");
  if (!(c.learning_rate > 0.0)) fail("learning_rate must be positive");
  if (!(c.margin_r > 0.0) || !(c.margin_c > 0.0)) fail("margins must be positive");
  if (c.dim < 1) fail("dim must be at least 1");
  if (c.bucket_count < 1) fail("bucket_count must be at least 1");
  if (c.layers < 1) fail("layers must be at least 1");
  if (c.k < 1) fail("k must be at least 1");
  if (c.iterations < 1) fail("iterations must be at least 1");
  if (c.top_m < 1) fail("top_m must be at least 1");
  if (c.batch_size < 2) fail("batch_size must be at least 2");
  if (c.eval_every < 1) fail("eval_every must be at least 1");
  if (c.max_epochs < 1) fail("max_epochs must be at least 1");
  if (c.supervised_epochs > c.total_epochs) fail("supervised_epochs exceeds total_epochs");
  if (c.work_dir.empty()) fail("work_dir must not be empty");
  if (allow_offgrid) return;
  for (const auto& f : detail::fields())
    if (f.on_grid && !f.on_grid(c))
      fail(f.key + " = " + f.get(c) + " is outside the tuning grid (use --allow-offgrid)");
}

/// Parses flat `key = value` lines; `#` starts a comment. Relative paths are
/// resolved against the config file's directory.
inline PipelineConfig parse_config(std::istream& in, const std::string& origin = "config",
                                   bool allow_offgrid = false,
                                   const std::filesystem::path& base = {}) {
  PipelineConfig cfg;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto where = origin + " line " + std::to_string(line_no) + ": ";
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    auto body = trim(line);
    if (body.empty()) continue;
    auto eq = body.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + "expected 'key = value'");
    auto key = std::string(trim(body.substr(0, eq)));
    auto value = trim(body.substr(eq + 1));
    if (!seen.insert(key).second) throw ConfigError(where + "duplicate key " + key);
    try {
      set_config_value(cfg, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  if (!base.empty())
    for (auto* p : {&cfg.corpus, &cfg.work_dir, &cfg.stopwords, &cfg.train_pairs,
                    &cfg.validation_pairs, &cfg.test_pairs})
      if (!p->empty() && std::filesystem::path(*p).is_relative()) *p = (base / *p).string();
  validate_config(cfg, allow_offgrid);
  return cfg;
}

inline PipelineConfig load_config(const std::filesystem::path& path, bool allow_offgrid = false) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  return parse_config(in, path.filename().string(), allow_offgrid, path.parent_path());
}

}  // namespace rasim

#endif  // RASIM_CONFIG_HPP
