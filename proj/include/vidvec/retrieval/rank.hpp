#pragma once

#include <algorithm>
#include <vector>

#include "vidvec/core/parallel.hpp"
#include "vidvec/core/types.hpp"

namespace vidvec {

// One RankedList per query row, every candidate included, sorted by
// descending score with ascending candidate id on ties.
inline std::vector<RankedList> rank(const SimilarityMatrix& m, unsigned threads = 1) {
  validate(m);
  std::vector<RankedList> out(static_cast<std::size_t>(m.rows()));
  parallel_for(out.size(), threads, [&](std::size_t i) {
    auto& list = out[i];
    list.query_id = m.query_ids[i];
    list.entries.reserve(m.candidate_ids.size());
    for (std::size_t j = 0; j < m.candidate_ids.size(); ++j)
      list.entries.push_back(
          {m.candidate_ids[j], m.scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)), Stage::First});
    std::sort(list.entries.begin(), list.entries.end(), ranks_before);
  });
  return out;
}

}  // namespace vidvec
