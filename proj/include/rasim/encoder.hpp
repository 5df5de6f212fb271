#ifndef RASIM_ENCODER_HPP
#define RASIM_ENCODER_HPP

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>
#include <spdlog/spdlog.h>

#include "rasim/errors.hpp"
#include "rasim/text.hpp"
#include "rasim/universe.hpp"

namespace rasim {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class EncoderKind {
  HashMean,     // trainable bucket table, mean-pooled over tokens
  Precomputed,  // frozen lookup by node id
  Random,       // frozen seeded Gaussian per node id (Graph-Only baseline)
};

/// Output of one encoder call. `buckets` lists the table row of each token
/// (with multiplicity) so gradients can be scattered back.
struct Encoding {
  Vec value;
  std::vector<std::uint32_t> buckets;
};

inline std::uint32_t token_bucket(std::string_view token, std::size_t bucket_count) {
  return static_cast<std::uint32_t>(fnv1a64(token) % bucket_count);
}

class TextEncoder {
 public:
  static constexpr double kInitStddev = 0.02;

  /// Hash-mean encoder with N(0, 0.02^2) bucket vectors.
  static TextEncoder hash_mean(std::size_t dim, std::size_t bucket_count, std::uint64_t seed) {
    if (dim < 1 || bucket_count < 1)
      throw std::invalid_argument("init_encoder: dim and bucket_count must be >= 1");
    TextEncoder enc;
    enc.kind_ = EncoderKind::HashMean;
    enc.dim_ = dim;
    enc.table_.resize(static_cast<long>(bucket_count), static_cast<long>(dim));
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, kInitStddev);
    for (long r = 0; r < enc.table_.rows(); ++r)
      for (long c = 0; c < enc.table_.cols(); ++c) enc.table_(r, c) = normal(rng);
    return enc;
  }

  static TextEncoder random_fixed(std::size_t dim, std::uint64_t seed) {
    TextEncoder enc;
    enc.kind_ = EncoderKind::Random;
    enc.dim_ = dim;
    enc.seed_ = seed;
    return enc;
  }

  static TextEncoder precomputed(std::size_t dim, std::unordered_map<std::string, Vec> rows,
                                 bool fallback_zero = false) {
    TextEncoder enc;
    enc.kind_ = EncoderKind::Precomputed;
    enc.dim_ = dim;
    enc.lookup_ = std::move(rows);
    enc.fallback_zero_ = fallback_zero;
    return enc;
  }

  /// Reads `dim=<d>` followed by `id<TAB>v1 v2 ...` lines.
  static TextEncoder load_precomputed(const std::filesystem::path& path,
                                      bool fallback_zero = false) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open embedding file: " + path.string());
    std::string line;
    if (!std::getline(in, line) || line.rfind("dim=", 0) != 0)
      throw DataError("embedding file line 1: expected dim=<d>");
    std::size_t dim = 0;
    try {
      dim = std::stoull(line.substr(4));
    } catch (const std::exception&) {
      throw DataError("embedding file line 1: bad dimension");
    }
    if (dim == 0) throw DataError("embedding file line 1: dimension must be positive");
    std::unordered_map<std::string, Vec> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
      ++line_no;
      if (trim(line).empty()) continue;
      auto where = "embedding file line " + std::to_string(line_no) + ": ";
      auto tab = line.find('\t');
      if (tab == std::string::npos || tab == 0) throw DataError(where + "expected id<TAB>values");
      std::istringstream vs(line.substr(tab + 1));
      std::vector<double> vals;
      std::string tok;
      while (vs >> tok) {
        try {
          std::size_t used = 0;
          vals.push_back(std::stod(tok, &used));
          if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
          throw DataError(where + "bad value '" + tok + "'");
        }
        if (!std::isfinite(vals.back())) throw DataError(where + "non-finite value");
      }
      if (vals.size() != dim)
        throw DataError(where + "expected " + std::to_string(dim) + " values, got " +
                        std::to_string(vals.size()));
      auto id = line.substr(0, tab);
      if (!rows.emplace(id, Eigen::Map<Vec>(vals.data(), static_cast<long>(dim))).second)
        throw DataError(where + "duplicate id " + id);
    }
    return precomputed(dim, std::move(rows), fallback_zero);
  }

  EncoderKind kind() const { return kind_; }
  std::size_t dim() const { return dim_; }
  std::uint64_t seed() const { return seed_; }
  bool trainable() const { return kind_ == EncoderKind::HashMean && trainable_; }
  void set_trainable(bool t) { trainable_ = t; }
  std::size_t bucket_count() const { return static_cast<std::size_t>(table_.rows()); }
  RowMat& table() { return table_; }
  const RowMat& table() const { return table_; }

  /// Mean of bucket vectors over tokenize(text); zero vector for no tokens.
  Encoding encode(std::string_view text) const {
    if (kind_ != EncoderKind::HashMean)
      throw std::logic_error("encode(text) requires a hash_mean encoder");
    Encoding e;
    e.value = Vec::Zero(static_cast<long>(dim_));
    auto toks = tokenize(text);
    if (toks.empty()) {
      spdlog::debug("encoding text without tokens; using the zero vector");
      return e;
    }
    for (const auto& t : toks) {
      auto b = token_bucket(t, bucket_count());
      e.buckets.push_back(b);
      e.value += table_.row(b).transpose();
    }
    e.value /= static_cast<double>(toks.size());
    return e;
  }

  /// Lookup by id for the frozen encoders.
  Vec lookup(const std::string& id) const {
    if (kind_ == EncoderKind::Random) {
      std::mt19937_64 rng(hash_combine(seed_, fnv1a64(id)));
      std::normal_distribution<double> normal(0.0, kInitStddev);
      Vec v(static_cast<long>(dim_));
      for (long i = 0; i < v.size(); ++i) v(i) = normal(rng);
      return v;
    }
    if (kind_ != EncoderKind::Precomputed)
      throw std::logic_error("lookup(id) requires a frozen encoder");
    auto it = lookup_.find(id);
    if (it != lookup_.end()) return it->second;
    if (!fallback_zero_) throw DataError("no precomputed embedding for id: " + id);
    spdlog::warn("no precomputed embedding for '{}'; using the zero vector", id);
    return Vec::Zero(static_cast<long>(dim_));
  }

  /// h^0 of a universe node. Hash-mean reads phrase text or the patent
  /// abstract. Frozen kinds look up "phrase:<text>" / "patent:<id>" keys for
  /// random vectors, and the bare phrase text / patent id for precomputed.
  Encoding encode_node(NodeRef n, const Universe& u) const {
    switch (kind_) {
      case EncoderKind::HashMean:
        return encode(n.is_phrase() ? u.phrase(n.id) : u.patent_text(n.id));
      case EncoderKind::Precomputed:
        return {lookup(n.is_phrase() ? u.phrase(n.id) : u.patent_id(n.id)), {}};
      case EncoderKind::Random:
        return {lookup(n.is_phrase() ? "phrase:" + u.phrase(n.id)
                                     : "patent:" + u.patent_id(n.id)),
                {}};
    }
    return {};
  }

  /// Adds d(loss)/d(table) given d(loss)/d(encoding) for one encoded text.
  void scatter_gradient(const Encoding& e, const Vec& grad, RowMat& table_grad) const {
    if (e.buckets.empty()) return;
    double w = 1.0 / static_cast<double>(e.buckets.size());
    for (auto b : e.buckets) table_grad.row(b) += w * grad.transpose();
  }

 private:
  EncoderKind kind_ = EncoderKind::HashMean;
  std::size_t dim_ = 0;
  bool trainable_ = true;
  std::uint64_t seed_ = 0;
  bool fallback_zero_ = false;
  RowMat table_;
  std::unordered_map<std::string, Vec> lookup_;
};

inline TextEncoder init_encoder(std::size_t dim = 64, std::size_t bucket_count = 65536,
                                std::uint64_t seed = 0) {
  return TextEncoder::hash_mean(dim, bucket_count, seed);
}

inline TextEncoder load_precomputed(const std::filesystem::path& path,
                                    bool fallback_zero = false) {
  return TextEncoder::load_precomputed(path, fallback_zero);
}

}  // namespace rasim

#endif  // RASIM_ENCODER_HPP
