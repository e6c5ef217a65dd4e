#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "vidvec/backends/mock.hpp"
#include "vidvec/rerank/rerank.hpp"

namespace vidvec {
namespace {

RankedList first_stage(std::size_t n) {
  RankedList l{"query text", {}};
  for (std::size_t i = 0; i < n; ++i)
    l.entries.push_back({"c" + std::to_string(i), 1.0 - 0.01 * static_cast<double>(i), Stage::First});
  return l;
}

PairInput as_text(const std::string& id) { return id; }

// Scores are a caller-supplied function of the candidate id.
class TableScorer final : public Backend {
 public:
  explicit TableScorer(std::function<double(const std::string&)> f) : f_(std::move(f)) {}
  BackendDescriptor descriptor() const override { return {"table", 1, 1, true, true}; }
  Embedding embed_text(const std::string&, TemplateId, int) const override { throw ContractError("unused"); }
  Embedding embed_video(const MediaSpec&, TemplateId, int) const override { throw ContractError("unused"); }
  double score_yes(const PairInput&, const PairInput& c, TemplateId) const override {
    ++calls;
    return f_(std::get<std::string>(c));
  }
  unsigned max_in_flight() const override { return 4; }
  mutable std::atomic<int> calls{0};

 private:
  std::function<double(const std::string&)> f_;
};

TEST(Rerank, KOfOneOnlyRescoresTopEntry) {
  const auto counting = std::make_shared<CountingBackend>(std::make_shared<MockBackend>());
  const auto fs = first_stage(10);
  const auto out = rerank(std::string("q"), fs, {1}, *counting, as_text);
  EXPECT_EQ(counting->score_calls(), 1u);
  EXPECT_EQ(out.entries[0].candidate_id, "c0");
  EXPECT_EQ(out.entries[0].stage, Stage::Reranked);
  for (std::size_t i = 1; i < 10; ++i) EXPECT_EQ(out.entries[i], fs.entries[i]);
}

TEST(Rerank, FullReorderMatchesSortOfMockScores) {
  const MockBackend mock;
  const auto fs = first_stage(25);
  const auto out = rerank(std::string("q"), fs, {100}, mock, as_text);
  std::vector<double> p;
  std::vector<std::string> ids;
  for (const auto& e : fs.entries) {
    ids.push_back(e.candidate_id);
    p.push_back(mock.score_yes(std::string("q"), e.candidate_id, TemplateId::YesNoRerank));
  }
  const auto expect = oracle::ranking(p, ids);
  ASSERT_EQ(out.entries.size(), 25u);
  for (std::size_t i = 0; i < 25; ++i) {
    EXPECT_EQ(out.entries[i].candidate_id, expect[i]);
    EXPECT_EQ(out.entries[i].stage, Stage::Reranked);
  }
}

TEST(Rerank, CallCountIsMinOfKAndListSize) {
  for (auto [k, n] : {std::pair{5, 20}, std::pair{20, 5}, std::pair{7, 7}}) {
    const auto counting = std::make_shared<CountingBackend>(std::make_shared<MockBackend>());
    rerank(std::string("q"), first_stage(static_cast<std::size_t>(n)), {k}, *counting, as_text);
    EXPECT_EQ(counting->score_calls(), static_cast<std::uint64_t>(std::min(k, n)));
  }
}

TEST(Rerank, TailIsUntouched) {
  const MockBackend mock;
  const auto fs = first_stage(30);
  const auto out = rerank(std::string("q"), fs, {10}, mock, as_text);
  std::set<std::string> head_in, head_out;
  for (int i = 0; i < 10; ++i) {
    head_in.insert(fs.entries[i].candidate_id);
    head_out.insert(out.entries[i].candidate_id);
  }
  EXPECT_EQ(head_in, head_out);
  for (std::size_t i = 10; i < 30; ++i) EXPECT_EQ(out.entries[i], fs.entries[i]);
}

TEST(Rerank, Idempotent) {
  const MockBackend mock;
  const auto once = rerank(std::string("q"), first_stage(12), {8}, mock, as_text);
  EXPECT_EQ(rerank(std::string("q"), once, {8}, mock, as_text), once);
}

TEST(Rerank, IncreasingScorerPreservesOrder) {
  const auto fs = first_stage(9);
  std::map<std::string, double> first;
  for (const auto& e : fs.entries) first[e.candidate_id] = e.score;
  TableScorer scorer([&](const std::string& id) { return 1.0 / (1.0 + std::exp(-5.0 * first.at(id))); });
  const auto out = rerank(std::string("q"), fs, {9}, scorer, as_text);
  for (std::size_t i = 0; i < 9; ++i) EXPECT_EQ(out.entries[i].candidate_id, fs.entries[i].candidate_id);
}

TEST(Rerank, TiesFallBackToFirstStageThenId) {
  RankedList fs{"q", {{"b", 0.9, Stage::First}, {"a", 0.9, Stage::First}, {"c", 0.95, Stage::First}}};
  TableScorer flat([](const std::string&) { return 0.5; });
  const auto out = rerank(std::string("q"), fs, {3}, flat, as_text);
  EXPECT_EQ(out.entries[0].candidate_id, "c");
  EXPECT_EQ(out.entries[1].candidate_id, "a");
  EXPECT_EQ(out.entries[2].candidate_id, "b");
}

TEST(Rerank, RequiresScoringCapability) {
  MockBackend::Options o;
  o.supports_scoring = false;
  const MockBackend m(o);
  EXPECT_THROW(rerank(std::string("q"), first_stage(3), {2}, m, as_text), CapabilityError);
  EXPECT_THROW(rerank(std::string("q"), first_stage(3), {0}, MockBackend(), as_text), ContractError);
}

class ProgressFile : public ::testing::Test {
 protected:
  void SetUp() override {
    path_ = std::filesystem::temp_directory_path() /
            ("vidvec_progress_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    std::filesystem::remove(path_);
  }
  void TearDown() override { std::filesystem::remove(path_); }
  std::filesystem::path path_;
};

TEST_F(ProgressFile, ResumeSkipsScoredPairs) {
  const auto fs = first_stage(10);
  TableScorer scorer([](const std::string& id) { return id == "c7" ? 0.9 : 0.1; });
  RankedList full;
  {
    ProgressLog log(path_);
    full = rerank(std::string("q"), fs, {10}, scorer, as_text, &log);
  }
  EXPECT_EQ(scorer.calls.load(), 10);
  ProgressLog again(path_);
  EXPECT_EQ(again.size(), 10u);
  EXPECT_EQ(rerank(std::string("q"), fs, {10}, scorer, as_text, &again), full);
  EXPECT_EQ(scorer.calls.load(), 10);
}

TEST_F(ProgressFile, PartialFailureKeepsCompletedScores) {
  const auto fs = first_stage(8);
  TableScorer flaky([](const std::string& id) -> double {
    if (id == "c5") throw TransportError("down", 4, 503);
    return 0.5;
  });
  {
    ProgressLog log(path_);
    try {
      rerank(std::string("q"), fs, {8}, flaky, as_text, &log);
      FAIL();
    } catch (const RerankError& e) {
      EXPECT_EQ(e.query_id(), "query text");
      EXPECT_LT(e.completed().size(), 8u);
      EXPECT_THROW(std::rethrow_exception(e.cause()), TransportError);
      for (const auto& [id, p] : e.completed()) EXPECT_EQ(log.find("query text", id), p);
    }
  }
  const int before = flaky.calls.load();
  ProgressLog resumed(path_);
  const auto saved = resumed.size();
  TableScorer healthy([](const std::string&) { return 0.5; });
  rerank(std::string("q"), fs, {8}, healthy, as_text, &resumed);
  EXPECT_EQ(healthy.calls.load(), static_cast<int>(8 - saved));
  EXPECT_GT(before, 0);
}

TEST_F(ProgressFile, TruncatedLastLineIsIgnored) {
  {
    std::ofstream f(path_);
    f << R"({"candidate_id":"c0","p_yes":0.25,"query_id":"q"})" << "\n" << R"({"candidate_id":"c1","p_)";
  }
  ProgressLog log(path_);
  EXPECT_EQ(log.size(), 1u);
  EXPECT_EQ(log.find("q", "c0"), 0.25);
  EXPECT_FALSE(log.find("q", "c1"));
}

TEST_F(ProgressFile, CorruptMiddleLineIsAnError) {
  {
    std::ofstream f(path_);
    f << "garbage\n" << R"({"candidate_id":"c0","p_yes":0.25,"query_id":"q"})" << "\n";
  }
  EXPECT_THROW(ProgressLog{path_}, Error);
}

TEST_F(ProgressFile, RecordsAreCanonicalJsonl) {
  {
    ProgressLog log(path_);
    log.record("q1", "c9", 0.5);
  }
  std::ifstream f(path_);
  std::string line;
  std::getline(f, line);
  EXPECT_EQ(line, R"({"candidate_id":"c9","p_yes":0.5,"query_id":"q1"})");
}

TEST(RerankConfig, Presets) {
  EXPECT_EQ(RerankConfig::zero_shot().k, 100);
  EXPECT_EQ(RerankConfig::optimized().k, 10);
}

}  // namespace
}  // namespace vidvec
