#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "vidvec/core/errors.hpp"
#include "vidvec/core/parallel.hpp"
#include "vidvec/core/types.hpp"

namespace vidvec {

namespace detail {

// dot, |a|^2, |b|^2 accumulated sequentially in double.
struct DotNorms {
  double dot = 0.0, aa = 0.0, bb = 0.0;
};

inline DotNorms dot_norms(std::span<const float> a, std::span<const float> b) noexcept {
  DotNorms r;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double x = a[k], y = b[k];
    r.dot += x * y;
    r.aa += x * x;
    r.bb += y * y;
  }
  return r;
}

inline double cosine_unchecked(std::span<const float> a, std::span<const float> b) {
  const auto r = dot_norms(a, b);
  VIDVEC_REQUIRE(r.aa > 0.0 && r.bb > 0.0, "cosine of a zero-norm vector");
  const double c = r.dot / (std::sqrt(r.aa) * std::sqrt(r.bb));
  return std::clamp(c, -1.0, 1.0);
}

}  // namespace detail

inline double cosine(std::span<const float> a, std::span<const float> b) {
  VIDVEC_REQUIRE(a.size() == b.size(), "cosine: dimension mismatch (" + std::to_string(a.size()) +
                                           " vs " + std::to_string(b.size()) + ")");
  return detail::cosine_unchecked(a, b);
}

inline double cosine(const Embedding& a, const Embedding& b) { return cosine(a.values, b.values); }

// scores(i, j) = cosine(queries[i], candidates[j]). Each entry is reduced
// sequentially, so the result does not depend on `threads`.
inline SimilarityMatrix build_similarity_matrix(std::span<const Embedding> queries,
                                                std::span<const Embedding> candidates,
                                                unsigned threads = 1) {
  VIDVEC_REQUIRE(!queries.empty() && !candidates.empty(),
                 "build_similarity_matrix: empty query or candidate list");
  const std::size_t dim = queries.front().dim();
  for (const auto& e : queries)
    VIDVEC_REQUIRE(e.dim() == dim, "build_similarity_matrix: mixed dimensions in queries");
  for (const auto& e : candidates)
    VIDVEC_REQUIRE(e.dim() == dim, "build_similarity_matrix: mixed dimensions across inputs");

  // Precompute norms once; the per-entry dot keeps sequential order.
  auto norms = [](std::span<const Embedding> es) {
    std::vector<double> out(es.size());
    for (std::size_t i = 0; i < es.size(); ++i) {
      double s = 0.0;
      for (float v : es[i].values) s += static_cast<double>(v) * v;
      VIDVEC_REQUIRE(s > 0.0, "zero-norm embedding '" + es[i].item_id + "'");
      out[i] = std::sqrt(s);
    }
    return out;
  };
  const auto qn = norms(queries);
  const auto cn = norms(candidates);

  SimilarityMatrix m;
  m.scores.resize(static_cast<Eigen::Index>(queries.size()),
                  static_cast<Eigen::Index>(candidates.size()));
  m.query_ids.reserve(queries.size());
  m.candidate_ids.reserve(candidates.size());
  for (const auto& q : queries) m.query_ids.push_back(q.item_id);
  for (const auto& c : candidates) m.candidate_ids.push_back(c.item_id);

  parallel_for(queries.size(), threads, [&](std::size_t i) {
    const auto& q = queries[i].values;
    for (std::size_t j = 0; j < candidates.size(); ++j) {
      const auto& c = candidates[j].values;
      double dot = 0.0;
      for (std::size_t k = 0; k < dim; ++k) dot += static_cast<double>(q[k]) * c[k];
      m.scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          std::clamp(dot / (qn[i] * cn[j]), -1.0, 1.0);
    }
  });
  return m;
}

// softmax(m / temperature) along each row, max-subtracted.
inline SimilarityMatrix row_softmax(const SimilarityMatrix& m, double temperature) {
  VIDVEC_REQUIRE(temperature > 0.0 && std::isfinite(temperature),
                 "softmax temperature must be positive");
  SimilarityMatrix out = m;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double mx = m.scores.row(i).maxCoeff();
    double sum = 0.0;
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double e = std::exp((m.scores(i, j) - mx) / temperature);
      out.scores(i, j) = e;
      sum += e;
    }
    out.scores.row(i) /= sum;
  }
  return out;
}

// softmax(m / temperature) along each column, max-subtracted.
inline SimilarityMatrix col_softmax(const SimilarityMatrix& m, double temperature) {
  VIDVEC_REQUIRE(temperature > 0.0 && std::isfinite(temperature),
                 "softmax temperature must be positive");
  SimilarityMatrix out = m;
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    const double mx = m.scores.col(j).maxCoeff();
    double sum = 0.0;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      const double e = std::exp((m.scores(i, j) - mx) / temperature);
      out.scores(i, j) = e;
      sum += e;
    }
    out.scores.col(j) /= sum;
  }
  return out;
}

}  // namespace vidvec
