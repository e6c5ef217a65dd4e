#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <span>
#include <string>

#include "vidvec/core/types.hpp"

namespace vidvec {

using PositiveMap = std::map<std::string, std::set<std::string>>;

// True when any of the query's positives appears among the first k entries.
inline bool hit_at_k(const RankedList& list, const std::set<std::string>& positives, int k) {
  const auto n = std::min<std::size_t>(static_cast<std::size_t>(k), list.entries.size());
  for (std::size_t r = 0; r < n; ++r)
    if (positives.contains(list.entries[r].candidate_id)) return true;
  return false;
}

// Fraction of queries with at least one positive in the top k.
inline double recall_at_k(std::span<const RankedList> ranked, const PositiveMap& positives, int k) {
  VIDVEC_REQUIRE(k >= 1, "recall_at_k: k must be >= 1");
  VIDVEC_REQUIRE(!ranked.empty(), "recall_at_k: no queries");
  std::size_t hits = 0;
  for (const auto& list : ranked) {
    auto it = positives.find(list.query_id);
    VIDVEC_REQUIRE(it != positives.end() && !it->second.empty(),
                   "recall_at_k: query '" + list.query_id + "' has no positives");
    if (hit_at_k(list, it->second, k)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(ranked.size());
}

}  // namespace vidvec
