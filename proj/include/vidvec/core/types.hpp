#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "vidvec/core/errors.hpp"

namespace vidvec {

enum class Modality : std::uint8_t { Text = 0, Video = 1 };

inline std::string_view to_string(Modality m) { return m == Modality::Text ? "text" : "video"; }

inline Modality modality_from_string(std::string_view s) {
  if (s == "text") return Modality::Text;
  if (s == "video") return Modality::Video;
  throw ContractError("unknown modality '" + std::string(s) + "'");
}

// A readout vector from one layer of a backend. Values are stored raw;
// normalization happens at scoring time.
struct Embedding {
  std::vector<float> values;
  int layer = 0;  // 0-based transformer block index
  Modality modality = Modality::Text;
  std::string item_id;

  std::size_t dim() const noexcept { return values.size(); }

  bool operator==(const Embedding&) const = default;
};

inline void validate(const Embedding& e) {
  VIDVEC_REQUIRE(!e.values.empty(), "embedding '" + e.item_id + "' has dim 0");
  VIDVEC_REQUIRE(e.layer >= 0, "embedding '" + e.item_id + "' has negative layer");
  for (float v : e.values)
    VIDVEC_REQUIRE(std::isfinite(v), "embedding '" + e.item_id + "' has a non-finite entry");
}

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Dense queries x candidates score grid.
struct SimilarityMatrix {
  Matrix scores;
  std::vector<std::string> query_ids;
  std::vector<std::string> candidate_ids;

  Eigen::Index rows() const noexcept { return scores.rows(); }
  Eigen::Index cols() const noexcept { return scores.cols(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return scores(i, j); }
};

inline void validate(const SimilarityMatrix& m) {
  VIDVEC_REQUIRE(static_cast<std::size_t>(m.rows()) == m.query_ids.size(),
                 "similarity matrix row count does not match query ids");
  VIDVEC_REQUIRE(static_cast<std::size_t>(m.cols()) == m.candidate_ids.size(),
                 "similarity matrix column count does not match candidate ids");
  VIDVEC_REQUIRE(m.scores.allFinite(), "similarity matrix has non-finite entries");
}

enum class Stage : std::uint8_t { First, Reranked };

struct RankedEntry {
  std::string candidate_id;
  double score = 0.0;
  Stage stage = Stage::First;

  bool operator==(const RankedEntry&) const = default;
};

struct RankedList {
  std::string query_id;
  std::vector<RankedEntry> entries;

  bool operator==(const RankedList&) const = default;
};

// Descending score, then ascending candidate id.
inline bool ranks_before(const RankedEntry& a, const RankedEntry& b) noexcept {
  if (a.score != b.score) return a.score > b.score;
  return a.candidate_id < b.candidate_id;
}

enum class Split : std::uint8_t { Train, Val, Test };

inline std::string_view to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "test";
}

inline Split split_from_string(std::string_view s) {
  if (s == "train") return Split::Train;
  if (s == "val") return Split::Val;
  if (s == "test") return Split::Test;
  throw ContractError("unknown split '" + std::string(s) + "'");
}

enum class Direction : std::uint8_t { T2V, V2T };

inline std::string_view to_string(Direction d) { return d == Direction::T2V ? "t2v" : "v2t"; }

inline Direction direction_from_string(std::string_view s) {
  if (s == "t2v" || s == "T2V") return Direction::T2V;
  if (s == "v2t" || s == "V2T") return Direction::V2T;
  throw ContractError("unknown direction '" + std::string(s) + "'");
}

struct ManifestItem {
  std::string item_id;
  std::string media_ref;
  std::vector<std::string> captions;
};

struct DatasetManifest {
  std::vector<ManifestItem> items;
  Split split = Split::Test;

  // Caption ids are "<item_id>#<index>".
  static std::string caption_id(const std::string& item_id, std::size_t index) {
    return item_id + "#" + std::to_string(index);
  }

  std::size_t caption_count() const noexcept {
    std::size_t n = 0;
    for (const auto& it : items) n += it.captions.size();
    return n;
  }

  // Every caption of an item is a positive for that item, in both directions.
  // Keys are query ids for the given direction.
  std::map<std::string, std::set<std::string>> positives(Direction d) const {
    std::map<std::string, std::set<std::string>> out;
    for (const auto& it : items) {
      for (std::size_t k = 0; k < it.captions.size(); ++k) {
        const auto cid = caption_id(it.item_id, k);
        if (d == Direction::T2V)
          out[cid].insert(it.item_id);
        else
          out[it.item_id].insert(cid);
      }
    }
    return out;
  }
};

inline void validate(const DatasetManifest& m) {
  std::set<std::string> seen;
  for (const auto& it : m.items) {
    VIDVEC_REQUIRE(seen.insert(it.item_id).second, "duplicate item id '" + it.item_id + "'");
    VIDVEC_REQUIRE(!it.captions.empty(), "item '" + it.item_id + "' has no captions");
  }
}

}  // namespace vidvec
