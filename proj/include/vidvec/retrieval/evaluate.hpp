#pragma once

#include <array>
#include <cmath>
#include <map>
#include <span>
#include <unordered_map>
#include <vector>

#include "vidvec/core/kernels.hpp"
#include "vidvec/retrieval/calibrate.hpp"
#include "vidvec/retrieval/metrics.hpp"
#include "vidvec/retrieval/rank.hpp"

namespace vidvec {

inline constexpr std::array<int, 3> kReportedK{1, 5, 10};

struct CalibrationConfig {
  bool enabled = false;
  double temperature_t2v = 1.0;
  double temperature_v2t = 1.0;

  double temperature(Direction d) const { return d == Direction::T2V ? temperature_t2v : temperature_v2t; }
};

inline void validate(const CalibrationConfig& c) {
  if (c.enabled)
    VIDVEC_REQUIRE(c.temperature_t2v > 0.0 && c.temperature_v2t > 0.0,
                   "calibration temperatures must be positive");
}

struct EvalReport {
  Direction direction = Direction::T2V;
  std::map<int, double> recall_at;
  std::size_t n_queries = 0;
  bool calibrated = false;

  double r(int k) const { return recall_at.at(k); }
  bool operator==(const EvalReport&) const = default;
};

// Query ids and candidate ids for a direction, in manifest order.
struct RetrievalRoles {
  std::vector<std::string> query_ids;
  std::vector<std::string> candidate_ids;
};

inline RetrievalRoles roles(const DatasetManifest& m, Direction d) {
  RetrievalRoles r;
  std::vector<std::string> captions, videos;
  for (const auto& it : m.items) {
    videos.push_back(it.item_id);
    for (std::size_t k = 0; k < it.captions.size(); ++k)
      captions.push_back(DatasetManifest::caption_id(it.item_id, k));
  }
  if (d == Direction::T2V) {
    r.query_ids = std::move(captions);
    r.candidate_ids = std::move(videos);
  } else {
    r.query_ids = std::move(videos);
    r.candidate_ids = std::move(captions);
  }
  return r;
}

// Picks embeddings for `ids` out of `pool` (matched on item_id), in id order.
inline std::vector<Embedding> select_embeddings(std::span<const Embedding> pool,
                                                const std::vector<std::string>& ids) {
  std::unordered_map<std::string_view, const Embedding*> by_id;
  for (const auto& e : pool) by_id.emplace(e.item_id, &e);
  std::vector<Embedding> out;
  std::vector<std::string> missing;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    auto it = by_id.find(id);
    if (it == by_id.end())
      missing.push_back(id);
    else
      out.push_back(*it->second);
  }
  if (!missing.empty()) throw MissingEmbeddingsError(std::move(missing));
  return out;
}

inline SimilarityMatrix scoring_matrix(const SimilarityMatrix& raw, Direction d, const CalibrationConfig& calib) {
  validate(calib);
  return calib.enabled ? dual_softmax_calibrate(raw, calib.temperature(d)) : raw;
}

inline EvalReport report_from_ranked(std::span<const RankedList> ranked, const PositiveMap& positives,
                                     Direction d, bool calibrated) {
  EvalReport rep;
  rep.direction = d;
  rep.calibrated = calibrated;
  rep.n_queries = ranked.size();
  for (int k : kReportedK) rep.recall_at[k] = recall_at_k(ranked, positives, k);
  return rep;
}

// Similarity matrix with rows/cols in manifest role order.
inline SimilarityMatrix manifest_similarity(const DatasetManifest& manifest, std::span<const Embedding> q_embs,
                                            std::span<const Embedding> c_embs, Direction d,
                                            unsigned threads = 1) {
  const auto r = roles(manifest, d);
  const auto qs = select_embeddings(q_embs, r.query_ids);
  const auto cs = select_embeddings(c_embs, r.candidate_ids);
  return build_similarity_matrix(qs, cs, threads);
}

// build_similarity_matrix -> optional dual-softmax -> rank -> Recall@{1,5,10}.
// For T2V, q_embs are caption embeddings keyed by caption id and c_embs video
// embeddings keyed by item id; V2T swaps the roles.
inline EvalReport evaluate(const DatasetManifest& manifest, std::span<const Embedding> q_embs,
                           std::span<const Embedding> c_embs, Direction d, const CalibrationConfig& calib,
                           unsigned threads = 1) {
  validate(manifest);
  const auto sim = manifest_similarity(manifest, q_embs, c_embs, d, threads);
  const auto ranked = rank(scoring_matrix(sim, d, calib), threads);
  return report_from_ranked(ranked, manifest.positives(d), d, calib.enabled);
}

// Candidate temperatures 0.01 * 2^i, i = 0..14.
inline std::vector<double> temperature_grid() {
  std::vector<double> grid;
  for (int i = 0; i <= 14; ++i) grid.push_back(0.01 * std::ldexp(1.0, i));
  return grid;
}

// Dual-softmax temperature maximizing R@1 on a validation matrix; the
// smallest temperature wins ties.
inline double tune_temperature(const SimilarityMatrix& val, const PositiveMap& positives) {
  double best_t = 0.0, best_r1 = -1.0;
  for (double t : temperature_grid()) {
    const auto ranked = rank(dual_softmax_calibrate(val, t));
    const double r1 = recall_at_k(ranked, positives, 1);
    if (r1 > best_r1) {
      best_r1 = r1;
      best_t = t;
    }
  }
  return best_t;
}

}  // namespace vidvec
