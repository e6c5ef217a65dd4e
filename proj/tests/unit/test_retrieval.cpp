#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "planted.hpp"
#include "vidvec/backends/mock.hpp"
#include "vidvec/retrieval/calibrate.hpp"
#include "vidvec/retrieval/evaluate.hpp"
#include "vidvec/retrieval/rank.hpp"
#include "vidvec/retrieval/report.hpp"
#include "vidvec/sweep/embedding_store.hpp"

namespace vidvec {
namespace {

SimilarityMatrix from_rows(const std::vector<std::vector<double>>& rows) {
  SimilarityMatrix m;
  m.scores.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    m.query_ids.push_back("q" + std::to_string(i));
    for (std::size_t j = 0; j < rows[i].size(); ++j) m.scores(i, j) = rows[i][j];
  }
  for (std::size_t j = 0; j < rows[0].size(); ++j) m.candidate_ids.push_back("c" + std::to_string(j));
  return m;
}

SimilarityMatrix seeded(int r, int c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<std::vector<double>> rows(r, std::vector<double>(c));
  for (auto& row : rows)
    for (auto& v : row) v = u(rng);
  return from_rows(rows);
}

std::vector<std::string> ids_of(const RankedList& l) {
  std::vector<std::string> out;
  for (const auto& e : l.entries) out.push_back(e.candidate_id);
  return out;
}

TEST(DualSoftmax, MatchesOracle) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto m = seeded(6, 9, seed);
    for (double tau : {0.5, 10.0, 80.0}) {
      const auto d = dual_softmax_calibrate(m, tau);
      const auto ref = oracle::dual_softmax(oracle::to_grid(m.scores), tau);
      for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 9; ++j) EXPECT_NEAR(d(i, j), static_cast<double>(ref[i][j]), 1e-12);
    }
  }
}

TEST(DualSoftmax, ShapeAndIdsPreserved) {
  const auto m = seeded(3, 5, 4);
  const auto d = dual_softmax_calibrate(m, 2.0);
  EXPECT_EQ(d.rows(), 3);
  EXPECT_EQ(d.cols(), 5);
  EXPECT_EQ(d.query_ids, m.query_ids);
  EXPECT_EQ(d.candidate_ids, m.candidate_ids);
  EXPECT_THROW(dual_softmax_calibrate(m, 0.0), ContractError);
}

TEST(DualSoftmax, DominantDiagonalStaysOnDiagonal) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + trial % 7;
    // diagonal in [0.9, 1.0], off-diagonal in [-0.1, 0.1]: the row-times-column
    // product keeps the diagonal on top for any tau at n <= 8
    std::vector<std::vector<double>> rows(n, std::vector<double>(n));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) rows[i][j] = i == j ? 0.95 + u(rng) * 0.5 : u(rng);
    const auto m = from_rows(rows);
    for (double tau : {0.01, 1.0, 100.0}) {
      const auto ranked = rank(dual_softmax_calibrate(m, tau));
      for (int i = 0; i < n; ++i) EXPECT_EQ(ranked[i].entries[0].candidate_id, "c" + std::to_string(i));
    }
  }
}

TEST(DualSoftmax, RecallUnchangedWhenArgmaxAgrees) {
  // brute force: where the calibrated per-row argmax equals the raw one, R@1 matches
  for (std::uint64_t seed = 10; seed < 30; ++seed) {
    const auto m = seeded(8, 8, seed);
    PositiveMap pos;
    for (int i = 0; i < 8; ++i) pos["q" + std::to_string(i)] = {"c" + std::to_string(i)};
    const double tau = 3.0;
    const auto raw = rank(m);
    const auto cal = rank(dual_softmax_calibrate(m, tau));
    bool same_argmax = true;
    for (int i = 0; i < 8; ++i) same_argmax &= raw[i].entries[0].candidate_id == cal[i].entries[0].candidate_id;
    if (same_argmax) EXPECT_EQ(recall_at_k(raw, pos, 1), recall_at_k(cal, pos, 1));
  }
}

TEST(Rank, IdentityMatrixPutsSelfFirst) {
  const auto m = from_rows({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
  const auto r = rank(m);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(r[i].entries[0].candidate_id, "c" + std::to_string(i));
}

TEST(Rank, TiesBreakByAscendingId) {
  auto m = from_rows({{0.5, 0.5, 0.5, 0.5}});
  m.candidate_ids = {"d", "b", "a", "c"};
  EXPECT_EQ(ids_of(rank(m)[0]), (std::vector<std::string>{"a", "b", "c", "d"}));
}

TEST(Rank, MatchesSortOracle) {
  for (auto [r, c] : {std::pair{5, 7}, std::pair{12, 3}, std::pair{1, 30}}) {
    const auto m = seeded(r, c, static_cast<std::uint64_t>(r * 100 + c));
    const auto ranked = rank(m, 3);
    ASSERT_EQ(ranked.size(), static_cast<std::size_t>(r));
    for (int i = 0; i < r; ++i) {
      std::vector<double> row(m.scores.row(i).begin(), m.scores.row(i).end());
      EXPECT_EQ(ids_of(ranked[i]), oracle::ranking(row, m.candidate_ids));
      EXPECT_EQ(ranked[i].query_id, m.query_ids[i]);
      EXPECT_EQ(ranked[i].entries.size(), static_cast<std::size_t>(c));
    }
  }
}

RankedList list_of(std::vector<std::string> ids) {
  RankedList l{"q", {}};
  double s = 1.0;
  for (auto& id : ids) l.entries.push_back({id, s -= 0.01, Stage::First});
  return l;
}

TEST(Recall, PerfectRanking) {
  const std::vector<RankedList> r{list_of({"a", "b"})};
  const PositiveMap p{{"q", {"a"}}};
  for (int k : {1, 5, 10}) EXPECT_EQ(recall_at_k(r, p, k), 1.0);
}

TEST(Recall, Threshold) {
  const std::vector<RankedList> r{list_of({"x1", "x2", "x3", "x4", "x5", "hit", "x7"})};
  const PositiveMap p{{"q", {"hit"}}};
  EXPECT_EQ(recall_at_k(r, p, 5), 0.0);
  EXPECT_EQ(recall_at_k(r, p, 6), 1.0);
  EXPECT_EQ(recall_at_k(r, p, 10), 1.0);
}

TEST(Recall, FortyPositivesBestAtRankThree) {
  std::vector<std::string> order{"n0", "n1"};
  std::set<std::string> pos;
  for (int i = 0; i < 40; ++i) {
    order.push_back("cap" + std::to_string(i));
    pos.insert("cap" + std::to_string(i));
  }
  for (int i = 2; i < 60; ++i) order.push_back("n" + std::to_string(i));
  const std::vector<RankedList> r{list_of(order)};
  const PositiveMap p{{"q", pos}};
  EXPECT_EQ(recall_at_k(r, p, 1), 0.0);
  EXPECT_EQ(recall_at_k(r, p, 5), 1.0);
}

TEST(Recall, EmptyPositiveSetIsContractError) {
  const std::vector<RankedList> r{list_of({"a"})};
  EXPECT_THROW(recall_at_k(r, PositiveMap{{"q", {}}}, 1), ContractError);
  EXPECT_THROW(recall_at_k(r, PositiveMap{}, 1), ContractError);
  EXPECT_THROW(recall_at_k(r, PositiveMap{{"q", {"a"}}}, 0), ContractError);
}

TEST(Recall, MonotoneInK) {
  const auto m = seeded(20, 30, 77);
  PositiveMap pos;
  std::mt19937_64 rng(3);
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 3; ++j) pos["q" + std::to_string(i)].insert("c" + std::to_string(rng() % 30));
  const auto r = rank(m);
  double prev = 0.0;
  for (int k = 1; k <= 30; ++k) {
    const double v = recall_at_k(r, pos, k);
    EXPECT_GE(v, prev);
    prev = v;
  }
  EXPECT_EQ(prev, 1.0);
}

TEST(Recall, InvariantUnderMonotoneTransforms) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto m = seeded(10, 10, 100 + seed);
    PositiveMap pos;
    for (int i = 0; i < 10; ++i) pos["q" + std::to_string(i)] = {"c" + std::to_string((i * 3) % 10)};
    auto t1 = m, t2 = m;
    t1.scores = (m.scores.array() * 3.0 + 7.0).exp().matrix();
    t2.scores = m.scores.array().cube().matrix();
    for (int k : {1, 5, 10}) {
      EXPECT_EQ(recall_at_k(rank(m), pos, k), recall_at_k(rank(t1), pos, k));
      EXPECT_EQ(recall_at_k(rank(m), pos, k), recall_at_k(rank(t2), pos, k));
    }
  }
}

TEST(Evaluate, PlantedCorpusIsPerfectAtPlantedLayer) {
  const ToyBackend toy;
  const auto m = testing::id_corpus(16);
  EmbeddingStore store;
  const auto e = embed_manifest(m, toy, ToyBackend::kPlantedLayer, TemplateId::VideoEOL, store);
  const auto t2v = evaluate(m, e.captions, e.videos, Direction::T2V, {});
  EXPECT_EQ(t2v.r(1), 1.0);
  EXPECT_EQ(t2v.n_queries, 16u);
  const auto v2t = evaluate(m, e.videos, e.captions, Direction::V2T, {});
  EXPECT_EQ(v2t.r(1), 1.0);
}

TEST(Evaluate, MockEmbeddingsAreNearChance) {
  const MockBackend mock;
  const auto m = testing::id_corpus(64);
  EmbeddingStore store;
  const auto e = embed_manifest(m, mock, 0, TemplateId::VideoEOL, store);
  const auto r = evaluate(m, e.captions, e.videos, Direction::T2V, {});
  // 64 queries at chance 1/64: mean 1 hit, P(>= 7 hits) < 1e-4
  EXPECT_LE(r.r(1), 6.0 / 64.0);
  EXPECT_NEAR(r.r(10), 10.0 / 64.0, 0.2);
}

TEST(Evaluate, MissingEmbeddingsNameTheIds) {
  const MockBackend mock;
  const auto m = testing::id_corpus(4);
  EmbeddingStore store;
  auto e = embed_manifest(m, mock, 0, TemplateId::VideoEOL, store);
  const auto dropped = e.videos.back().item_id;
  e.videos.pop_back();
  try {
    evaluate(m, e.captions, e.videos, Direction::T2V, {});
    FAIL();
  } catch (const MissingEmbeddingsError& err) {
    EXPECT_EQ(err.ids(), std::vector<std::string>{dropped});
  }
}

TEST(Evaluate, GalleryOfOneIsAlwaysHit) {
  DatasetManifest m;
  m.items = {{"only", "only", {"x", "y", "z"}}};
  const MockBackend mock;
  EmbeddingStore store;
  const auto e = embed_manifest(m, mock, 1, TemplateId::VideoEOL, store);
  const auto r = evaluate(m, e.captions, e.videos, Direction::T2V, {});
  for (int k : kReportedK) EXPECT_EQ(r.r(k), 1.0);
  CalibrationConfig on;
  on.enabled = true;
  for (int k : kReportedK) EXPECT_EQ(evaluate(m, e.captions, e.videos, Direction::T2V, on).r(k), 1.0);
}

TEST(Evaluate, MultiPositiveVideoToText) {
  // v2t: a video query hits when any of its captions ranks within k
  DatasetManifest m;
  m.items = {{"v0", "v0", {"a", "b"}}, {"v1", "v1", {"c"}}};
  auto emb = [](std::string id, std::vector<float> v, Modality mod) {
    Embedding e;
    e.item_id = std::move(id);
    e.values = std::move(v);
    e.modality = mod;
    return e;
  };
  const std::vector<Embedding> videos{emb("v0", {1, 0}, Modality::Video), emb("v1", {0, 1}, Modality::Video)};
  const std::vector<Embedding> captions{emb("v0#0", {0.2f, 1}, Modality::Text), emb("v0#1", {1, 0.1f}, Modality::Text),
                                        emb("v1#0", {0.1f, 1}, Modality::Text)};
  const auto r = evaluate(m, videos, captions, Direction::V2T, {});
  EXPECT_EQ(r.r(1), 1.0);
  EXPECT_EQ(r.n_queries, 2u);
}

TEST(Calibration, TemperatureGrid) {
  const auto g = temperature_grid();
  ASSERT_EQ(g.size(), 15u);
  EXPECT_DOUBLE_EQ(g.front(), 0.01);
  EXPECT_DOUBLE_EQ(g.back(), 0.01 * 16384);
  for (std::size_t i = 1; i < g.size(); ++i) EXPECT_DOUBLE_EQ(g[i], 2 * g[i - 1]);
}

TEST(Calibration, TuningPicksBestR1SmallestOnTies) {
  const auto m = seeded(12, 12, 31);
  PositiveMap pos;
  for (int i = 0; i < 12; ++i) pos["q" + std::to_string(i)] = {"c" + std::to_string(i)};
  const double best = tune_temperature(m, pos);
  double best_r1 = -1, first_t = 0;
  for (double t : temperature_grid()) {
    const double r1 = recall_at_k(rank(dual_softmax_calibrate(m, t)), pos, 1);
    if (r1 > best_r1) {
      best_r1 = r1;
      first_t = t;
    }
  }
  EXPECT_EQ(best, first_t);
}

TEST(Calibration, DirectionSpecificTemperature) {
  CalibrationConfig c;
  c.enabled = true;
  c.temperature_t2v = 2.0;
  c.temperature_v2t = 5.0;
  EXPECT_EQ(c.temperature(Direction::T2V), 2.0);
  EXPECT_EQ(c.temperature(Direction::V2T), 5.0);
  c.temperature_v2t = -1;
  EXPECT_THROW(validate(c), ContractError);
}

TEST(Report, JsonRoundTripAndTable) {
  EvalReport r;
  r.direction = Direction::V2T;
  r.n_queries = 12;
  r.calibrated = true;
  r.recall_at = {{1, 0.25}, {5, 0.5}, {10, 1.0}};
  EXPECT_EQ(report_from_json(report_to_json(r)), r);
  const std::vector<std::pair<std::string, EvalReport>> rows{{"first", r}};
  const auto table = format_table(rows);
  EXPECT_NE(table.find("25.0"), std::string::npos);
  EXPECT_NE(table.find("100.0"), std::string::npos);
  const std::vector<std::pair<int, EvalReport>> layers{{3, r}};
  EXPECT_EQ(format_layer_csv(layers), "layer,r1,r5,r10\n3,0.250000,0.500000,1.000000\n");
}

}  // namespace
}  // namespace vidvec
