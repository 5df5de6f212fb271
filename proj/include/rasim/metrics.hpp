#ifndef RASIM_METRICS_HPP
#define RASIM_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <spdlog/spdlog.h>

#include "rasim/encoder.hpp"
#include "rasim/errors.hpp"

namespace rasim {

/// Cosine similarity; 0.0 when either vector is all-zero.
inline double infer_similarity(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw ShapeError("infer_similarity: dimension mismatch");
  double na = a.norm(), nb = b.norm();
  if (na == 0.0 || nb == 0.0) {
    spdlog::debug("cosine with a zero vector; returning 0");
    return 0.0;
  }
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

/// Pearson product-moment correlation. Throws on length mismatch, fewer than
/// two values, or zero variance on either side.
inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw DataError("correlation: length mismatch");
  if (x.size() < 2) throw DataError("correlation: need at least two values");
  const double n = static_cast<double>(x.size());
  double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw DataError("correlation: zero-variance input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

/// 1-based ranks; tied values share the mean of their rank range.
inline std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw DataError("correlation: length mismatch");
  return pearson(average_ranks(x), average_ranks(y));
}

struct Correlations {
  double pearson = 0;
  double spearman = 0;
};

inline Correlations correlations(const std::vector<double>& predicted,
                                 const std::vector<double>& labels) {
  return {pearson(predicted, labels), spearman(predicted, labels)};
}

}  // namespace rasim

#endif  // RASIM_METRICS_HPP
