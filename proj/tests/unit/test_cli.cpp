#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "planted.hpp"
#include "vidvec/cli/pipeline.hpp"

namespace vidvec {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

void spit(const fs::path& p, const std::string& s) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  f << s;
}

class Workdir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("vidvec_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  RunConfig config_for(const DatasetManifest& m, BackendKind kind, int layer) {
    write_manifest(dir_ / "manifest.json", m);
    RunConfig c;
    c.backend.kind = kind;
    c.manifest = dir_ / "manifest.json";
    c.layer = layer;
    c.output_dir = dir_ / "out";
    return c;
  }

  fs::path dir_;
};

TEST(Ingest, TwoItemsKeepCaptionCounts) {
  std::istringstream in(R"({"item_id":"a","media_ref":"a.mp4","captions":["x","y","z"]}
{"item_id":"b","media_ref":"b.mp4","captions":["w"]}
)");
  const auto m = ingest(in);
  ASSERT_EQ(m.items.size(), 2u);
  EXPECT_EQ(m.items[0].captions.size(), 3u);
  EXPECT_EQ(m.items[1].captions.size(), 1u);
  EXPECT_EQ(m.items[0].media_ref, "a.mp4");
}

TEST(Ingest, ParagraphModeJoinsCaptions) {
  std::istringstream in(R"({"item_id":"a","media_ref":"a","captions":["a","b"]})");
  IngestOptions o;
  o.paragraph = true;
  EXPECT_EQ(ingest(in, o).items[0].captions, std::vector<std::string>{"a. b"});
  EXPECT_EQ(join_paragraph({" A man walks. ", "He sits down."}), "A man walks. He sits down");
}

TEST(Ingest, ReportsEveryBadRecord) {
  std::istringstream in(R"({"item_id":"a","captions":["x"]}
{"item_id":"a","captions":["y"]}
{"item_id":"c","captions":[]}
{"item_id":"d","captions":["  "]}
{broken
{"item_id":"e","captions":["ok"]}
)");
  try {
    ingest(in);
    FAIL();
  } catch (const IngestError& e) {
    ASSERT_EQ(e.problems().size(), 4u);
    EXPECT_NE(e.problems()[0].find("line 2"), std::string::npos);
    EXPECT_NE(e.problems()[0].find("duplicate"), std::string::npos);
    EXPECT_NE(e.problems()[3].find("line 5"), std::string::npos);
  }
}

TEST(Ingest, MsvdShapedPositives) {
  // 670 videos, 27,763 captions in total
  std::ostringstream raw;
  std::size_t total = 0;
  for (int i = 0; i < 670; ++i) {
    const int n = 41 + (i < 293 ? 1 : 0);
    nlohmann::json caps = nlohmann::json::array();
    for (int k = 0; k < n; ++k) caps.push_back("caption " + std::to_string(k));
    total += static_cast<std::size_t>(n);
    raw << nlohmann::json{{"item_id", "vid" + std::to_string(i)}, {"media_ref", "x"}, {"captions", caps}}.dump()
        << "\n";
  }
  ASSERT_EQ(total, 27763u);
  std::istringstream in(raw.str());
  const auto m = ingest(in);
  EXPECT_EQ(m.positives(Direction::T2V).size(), 27763u);
  const auto v2t = m.positives(Direction::V2T);
  EXPECT_EQ(v2t.size(), 670u);
  std::size_t pos = 0;
  for (const auto& [q, s] : v2t) pos += s.size();
  EXPECT_EQ(pos, 27763u);
}

TEST_F(Workdir, ManifestJsonRoundTrip) {
  const auto m = testing::noisy_caption_corpus(5, 2, 1);
  write_manifest(dir_ / "m.json", m);
  const auto back = read_manifest(dir_ / "m.json");
  ASSERT_EQ(back.items.size(), 5u);
  EXPECT_EQ(back.items[4].captions, m.items[4].captions);
}

TEST_F(Workdir, ConfigParsesSectionsAndResolvesPaths) {
  spit(dir_ / "m.json", "{}");
  spit(dir_ / "run.ini", R"(
[backend]
kind = remote
endpoint = http://localhost:9000
max_in_flight = 4

[dataset]
manifest = m.json

[eval]
direction = v2t
layer = 12
prompt_variant = video_eol
fps = 1.5
max_frames = 32

[calibration]
enabled = true
temperature_v2t = 0.64

[rerank]
k = 10

[output]
dir = results
)");
  const auto c = load_config(dir_ / "run.ini");
  EXPECT_EQ(c.backend.kind, BackendKind::Remote);
  EXPECT_EQ(c.backend.endpoint, "http://localhost:9000");
  EXPECT_EQ(c.backend.max_in_flight, 4u);
  EXPECT_EQ(c.manifest, dir_ / "m.json");
  EXPECT_EQ(c.direction, Direction::V2T);
  EXPECT_EQ(c.layer, 12);
  EXPECT_EQ(c.prompt_variant, TemplateId::VideoEOL);
  EXPECT_EQ(c.fps, 1.5);
  EXPECT_EQ(c.max_frames, 32);
  EXPECT_TRUE(c.calibration.enabled);
  EXPECT_EQ(c.calibration.temperature_v2t, 0.64);
  ASSERT_TRUE(c.rerank);
  EXPECT_EQ(c.rerank->k, 10);
  EXPECT_EQ(c.output_dir, dir_ / "results");
  EXPECT_NO_THROW(validate(c));
}

TEST_F(Workdir, ConfigDefaults) {
  spit(dir_ / "m.json", "{}");
  spit(dir_ / "run.ini", "[dataset]\nmanifest = m.json\n");
  const auto c = load_config(dir_ / "run.ini");
  EXPECT_EQ(c.layer, 24);
  EXPECT_EQ(c.fps, 2.0);
  EXPECT_EQ(c.max_frames, 180);
  EXPECT_EQ(c.prompt_variant, TemplateId::VideoEOLPrefixed);
  EXPECT_FALSE(c.rerank);
  EXPECT_FALSE(c.calibration.enabled);
}

TEST_F(Workdir, ConfigErrors) {
  spit(dir_ / "m.json", "{}");
  auto expect_config_error = [&](const std::string& ini) {
    spit(dir_ / "bad.ini", ini);
    EXPECT_THROW(validate(load_config(dir_ / "bad.ini")), ConfigError) << ini;
  };
  expect_config_error("[dataset]\nmanifest = m.json\n[eval]\nlayr = 3\n");
  expect_config_error("[dataset]\nmanifest = m.json\n[eval]\nlayer = three\n");
  expect_config_error("[dataset]\nmanifest = missing.json\n");
  expect_config_error("[dataset]\nmanifest = m.json\n[backend]\nkind = remote\n");
  expect_config_error("[dataset]\nmanifest = m.json\n[backend]\nkind = gpu\n");
  expect_config_error("[dataset]\nmanifest = m.json\n[eval]\nprompt_variant = text_eol\n");
  expect_config_error("[dataset]\nmanifest = m.json\n[rerank]\nk = 0\n");
  expect_config_error("[dataset]\nmanifest = m.json\n[eval]\ndirection = sideways\n");
}

TEST_F(Workdir, ConfigHashTracksResultRelevantFields) {
  auto c = config_for(testing::id_corpus(4), BackendKind::Toy, 2);
  const auto h = config_hash(c);
  auto threads = c;
  threads.threads = 7;
  threads.output_dir = dir_ / "elsewhere";
  EXPECT_EQ(config_hash(threads), h);
  auto layer = c;
  layer.layer = 3;
  EXPECT_NE(config_hash(layer), h);
  write_manifest(c.manifest, testing::id_corpus(5));
  EXPECT_NE(config_hash(c), h);
}

TEST_F(Workdir, MockEndToEndIsNearChance) {
  const auto c = config_for(testing::id_corpus(8), BackendKind::Mock, 24);
  const auto r = run_pipeline(c);
  EXPECT_EQ(r.first.n_queries, 8u);
  EXPECT_LE(r.first.r(1), 4.0 / 8.0);  // Binomial(8, 1/8): P(>= 5) < 1e-3
  EXPECT_FALSE(r.reranked);
  EXPECT_TRUE(fs::exists(c.output_dir / "report.json"));
  EXPECT_TRUE(fs::exists(c.output_dir / "report.txt"));
  const auto artifacts = nlohmann::json::parse(slurp(c.output_dir / "artifacts.json"));
  EXPECT_EQ(artifacts.at("config_hash"), r.config_hash);
  for (const auto& f : artifacts.at("files")) EXPECT_TRUE(fs::exists(c.output_dir / f.get<std::string>())) << f;
}

TEST_F(Workdir, ToyRerankDoesNotHurt) {
  auto c = config_for(testing::noisy_caption_corpus(32, 1, 2), BackendKind::Toy, 2);
  c.rerank = RerankConfig{16};
  const auto r = run_pipeline(c);
  ASSERT_TRUE(r.reranked);
  EXPECT_GE(r.reranked->r(1), r.first.r(1));
  const auto report = nlohmann::json::parse(slurp(c.output_dir / "report.json"));
  EXPECT_EQ(report.at("config_hash"), r.config_hash);
  EXPECT_TRUE(report.at("stages").contains("reranked"));
  EXPECT_EQ(slurp(c.output_dir / "report.txt").rfind("# config " + r.config_hash, 0), 0u);
}

TEST_F(Workdir, RepeatedRunsAreByteIdentical) {
  auto c = config_for(testing::noisy_caption_corpus(12, 2, 3), BackendKind::Toy, 2);
  c.rerank = RerankConfig{4};
  c.calibration.enabled = true;
  c.threads = 3;
  run_pipeline(c);
  std::map<std::string, std::string> first;
  for (const auto& e : fs::recursive_directory_iterator(c.output_dir))
    if (e.is_regular_file()) first[fs::relative(e.path(), c.output_dir).string()] = slurp(e.path());
  fs::remove_all(c.output_dir);
  run_pipeline(c);
  std::map<std::string, std::string> second;
  for (const auto& e : fs::recursive_directory_iterator(c.output_dir))
    if (e.is_regular_file()) second[fs::relative(e.path(), c.output_dir).string()] = slurp(e.path());
  EXPECT_EQ(first, second);
}

TEST_F(Workdir, CachesAreReusedAndKeyedByLayer) {
  auto c = config_for(testing::id_corpus(6), BackendKind::Toy, 2);
  run_pipeline(c);
  auto count = [&] {
    std::size_t n = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(c.output_dir / "cache")) ++n;
    return n;
  };
  EXPECT_EQ(count(), 2u);
  const auto again = run_pipeline(c);
  EXPECT_EQ(count(), 2u);
  c.layer = 3;
  run_pipeline(c);
  EXPECT_EQ(count(), 4u);
}

TEST_F(Workdir, ZeroInitAdapterGivesIdenticalReport) {
  auto c = config_for(testing::noisy_caption_corpus(10, 1, 5), BackendKind::Toy, 2);
  const auto plain = run_pipeline(c);
  save_adapter(dir_ / "zero.vadp", AdapterParams::zero_init(32, 8, 16.0, 1));
  c.adapter = dir_ / "zero.vadp";
  c.output_dir = dir_ / "out_adapter";
  const auto with = run_pipeline(c);
  EXPECT_EQ(report_to_json(plain.first).dump(), report_to_json(with.first).dump());
}

TEST_F(Workdir, StageErrorsNameTheStage) {
  auto c = config_for(testing::id_corpus(3), BackendKind::Mock, 24);
  save_adapter(dir_ / "wrong_dim.vadp", AdapterParams::zero_init(32, 4, 8.0, 1));
  c.adapter = dir_ / "wrong_dim.vadp";
  try {
    run_pipeline(c);
    FAIL();
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "backend");
    EXPECT_THROW(e.rethrow_cause(), ConfigError);
  }
}

TEST_F(Workdir, CorruptCacheIsRebuilt) {
  auto c = config_for(testing::id_corpus(4), BackendKind::Toy, 2);
  const auto a = run_pipeline(c);
  for (const auto& e : fs::directory_iterator(c.output_dir / "cache")) spit(e.path(), "VVEC garbage");
  const auto b = run_pipeline(c);
  EXPECT_EQ(a.first, b.first);
}

#ifdef VIDVEC_CLI_PATH
int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(VIDVEC_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST_F(Workdir, CliExitCodes) {
  const auto log = dir_ / "log.txt";
  spit(dir_ / "raw.jsonl", R"({"item_id":"dog","media_ref":"dog","captions":["a dog runs"]}
{"item_id":"cat","media_ref":"cat","captions":["a cat sleeps"]}
)");
  ASSERT_EQ(run_cli("ingest --input " + (dir_ / "raw.jsonl").string() + " --output " + (dir_ / "m.json").string(), log), 0)
      << slurp(log);
  spit(dir_ / "run.ini", "[backend]\nkind = toy\n[dataset]\nmanifest = m.json\n[eval]\nlayer = 2\n[output]\ndir = out\n");
  const auto cfg = (dir_ / "run.ini").string();
  EXPECT_EQ(run_cli("eval --config " + cfg, log), 0) << slurp(log);
  EXPECT_NE(slurp(log).find("R@1"), std::string::npos);
  EXPECT_EQ(run_cli("rerank --config " + cfg + " --rerank-k 2", log), 0) << slurp(log);
  EXPECT_EQ(run_cli("layer-sweep --config " + cfg + " --layers 0-3", log), 0) << slurp(log);
  EXPECT_EQ(slurp(dir_ / "out" / "layer_sweep.csv").rfind("layer,r1,r5,r10\n0,", 0), 0u);
  EXPECT_EQ(run_cli("report --dir " + (dir_ / "out").string(), log), 0);
  EXPECT_EQ(run_cli("embed --config " + cfg + " --layer 9", log), 2) << slurp(log);
  EXPECT_EQ(run_cli("eval --config " + (dir_ / "nope.ini").string(), log), 2) << slurp(log);

  spit(dir_ / "bad.jsonl", "{\"item_id\":\"a\",\"captions\":[]}\n");
  EXPECT_EQ(run_cli("ingest --input " + (dir_ / "bad.jsonl").string() + " --output " + (dir_ / "x.json").string(), log), 6);

  spit(dir_ / "remote.ini",
       "[backend]\nkind = remote\nendpoint = http://127.0.0.1:1\n[dataset]\nmanifest = m.json\n[eval]\nlayer = 2\n"
       "[output]\ndir = out_remote\n");
  EXPECT_EQ(run_cli("eval --config " + (dir_ / "remote.ini").string(), log), 3) << slurp(log);

  const auto pairs = testing::summary_pairs(32, 0, 1);
  write_pairs(dir_ / "pairs.jsonl", pairs.train);
  EXPECT_EQ(run_cli("train-adapter --pairs " + (dir_ / "pairs.jsonl").string() + " --backend toy --layer 2 --rank 4"
                    " --alpha 8 --batch-size 8 --lr 0.02 --output " + (dir_ / "adapter").string(), log), 0)
      << slurp(log);
  EXPECT_TRUE(fs::exists(dir_ / "adapter" / "adapter.vadp"));
  EXPECT_EQ(slurp(dir_ / "adapter" / "train_log.csv").rfind("step,loss,temperature\n", 0), 0u);
  EXPECT_EQ(run_cli("train-adapter --pairs " + (dir_ / "pairs.jsonl").string() + " --backend toy --batch-size 64", log),
            4)
      << slurp(log);
  EXPECT_EQ(run_cli("layer-sweep --config " + cfg + " --layers 1-x", log), 2);
}
#endif

}  // namespace
}  // namespace vidvec
