#pragma once

#include <algorithm>
#include <functional>
#include <mutex>
#include <optional>
#include <vector>

#include "vidvec/backends/backend.hpp"
#include "vidvec/core/parallel.hpp"
#include "vidvec/rerank/progress.hpp"

namespace vidvec {

enum class ScoreCombination { ReplaceTopK };

struct RerankConfig {
  int k = 100;
  ScoreCombination score_combination = ScoreCombination::ReplaceTopK;

  static RerankConfig zero_shot() { return {100}; }
  static RerankConfig optimized() { return {10}; }
};

// Scorer failure part-way through a query. Scores already obtained are kept
// (and are in the progress log when one is attached), so the query can be resumed.
class RerankError : public Error {
 public:
  RerankError(const std::string& what, std::string query_id,
              std::vector<std::pair<std::string, double>> completed, std::exception_ptr cause = nullptr)
      : Error(what), query_id_(std::move(query_id)), completed_(std::move(completed)), cause_(std::move(cause)) {}
  const std::string& query_id() const noexcept { return query_id_; }
  const std::vector<std::pair<std::string, double>>& completed() const noexcept { return completed_; }
  // The scorer's original exception.
  std::exception_ptr cause() const noexcept { return cause_; }

 private:
  std::string query_id_;
  std::vector<std::pair<std::string, double>> completed_;
  std::exception_ptr cause_;
};

using InputResolver = std::function<PairInput(const std::string& id)>;

// Rescores the top min(k, |list|) entries with backend.score_yes and orders
// them by descending p_yes (ties: first-stage score, then id). The rest of
// the list stays below the block in its first-stage order.
inline RankedList rerank(const PairInput& query, const RankedList& first_stage, const RerankConfig& cfg,
                         const Backend& backend, const InputResolver& resolve_candidate,
                         ProgressLog* progress = nullptr) {
  VIDVEC_REQUIRE(cfg.k >= 1, "rerank: k must be >= 1");
  VIDVEC_REQUIRE(!first_stage.entries.empty(), "rerank: empty first-stage list");
  const auto desc = backend.descriptor();
  if (!desc.supports_scoring)
    throw CapabilityError("backend '" + desc.name + "' does not support pair scoring");

  const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(cfg.k), first_stage.entries.size());
  std::vector<std::optional<double>> p(n);
  // Scores reach the progress log in rank order, whatever order they finish in.
  std::mutex mu;
  std::size_t flushed = 0;
  auto flush = [&](bool all) {
    for (; flushed < n; ++flushed) {
      if (!p[flushed]) {
        if (!all) break;
        continue;
      }
      if (progress) progress->record(first_stage.query_id, first_stage.entries[flushed].candidate_id, *p[flushed]);
    }
  };
  try {
    parallel_for(n, backend.max_in_flight(), [&](std::size_t i) {
      const auto& cid = first_stage.entries[i].candidate_id;
      std::optional<double> cached;
      if (progress) cached = progress->find(first_stage.query_id, cid);
      const double score =
          cached ? *cached : backend.score_yes(query, resolve_candidate(cid), TemplateId::YesNoRerank);
      VIDVEC_REQUIRE(score >= 0.0 && score <= 1.0, "scorer returned p_yes outside [0, 1]");
      std::lock_guard lock(mu);
      p[i] = score;
      flush(false);
    });
  } catch (const std::exception& e) {
    std::vector<std::pair<std::string, double>> done;
    std::lock_guard lock(mu);
    flush(true);
    for (std::size_t i = 0; i < n; ++i)
      if (p[i]) done.emplace_back(first_stage.entries[i].candidate_id, *p[i]);
    throw RerankError(std::string("rerank of query '") + first_stage.query_id + "' failed: " + e.what(),
                      first_stage.query_id, std::move(done), std::current_exception());
  }

  struct Scored {
    RankedEntry entry;
    double first_score;
  };
  std::vector<Scored> block;
  block.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& src = first_stage.entries[i];
    block.push_back({{src.candidate_id, *p[i], Stage::Reranked}, src.score});
  }
  std::sort(block.begin(), block.end(), [](const Scored& a, const Scored& b) {
    if (a.entry.score != b.entry.score) return a.entry.score > b.entry.score;
    if (a.first_score != b.first_score) return a.first_score > b.first_score;
    return a.entry.candidate_id < b.entry.candidate_id;
  });

  RankedList out;
  out.query_id = first_stage.query_id;
  out.entries.reserve(first_stage.entries.size());
  for (auto& s : block) out.entries.push_back(std::move(s.entry));
  out.entries.insert(out.entries.end(), first_stage.entries.begin() + static_cast<std::ptrdiff_t>(n),
                     first_stage.entries.end());
  return out;
}

}  // namespace vidvec
