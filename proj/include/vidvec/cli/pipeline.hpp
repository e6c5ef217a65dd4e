#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <unordered_map>

#include <json.hpp>

#include "vidvec/adapter/adapter_io.hpp"
#include "vidvec/backends/mock.hpp"
#include "vidvec/backends/remote.hpp"
#include "vidvec/backends/toy.hpp"
#include "vidvec/backends/wire.hpp"
#include "vidvec/cli/config.hpp"
#include "vidvec/cli/manifest_io.hpp"
#include "vidvec/core/cache.hpp"
#include "vidvec/rerank/rerank.hpp"
#include "vidvec/retrieval/report.hpp"
#include "vidvec/sweep/embedding_store.hpp"

namespace vidvec {

inline std::shared_ptr<const Backend> make_backend(const BackendConfig& c) {
  switch (c.kind) {
    case BackendKind::Mock: {
      MockBackend::Options o;
      if (c.seed) o.seed = *c.seed;
      return std::make_shared<MockBackend>(o);
    }
    case BackendKind::Toy: {
      ToyBackend::Options o;
      if (c.seed) o.seed = *c.seed;
      return std::make_shared<ToyBackend>(o);
    }
    case BackendKind::Remote: {
      RemoteBackend::Options o;
      o.endpoint = c.endpoint;
      o.max_in_flight = c.max_in_flight;
      return std::make_shared<RemoteBackend>(o);
    }
  }
  throw ConfigError("unknown backend kind");
}

// Failure inside a named pipeline stage.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::exception& cause, std::exception_ptr inner)
      : Error(stage + ": " + cause.what()), stage_(std::move(stage)), inner_(std::move(inner)) {}
  const std::string& stage() const noexcept { return stage_; }
  [[noreturn]] void rethrow_cause() const { std::rethrow_exception(inner_); }

 private:
  std::string stage_;
  std::exception_ptr inner_;
};

template <class Fn>
auto run_stage(const std::string& name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e, std::current_exception());
  }
}

struct PipelineResult {
  std::string config_hash;
  EvalReport first;
  std::optional<EvalReport> reranked;
  std::optional<double> temperature;
  std::vector<std::filesystem::path> artifacts;  // relative to output_dir
};

namespace detail {

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot write '" + path.string() + "'");
  f << text;
}

// Embeddings of a manifest at the configured layer/prompt, adapter applied,
// memoized on disk under cache/. The key covers everything that changes the
// vectors: backend, layer, templates, frame sampling, adapter and dataset.
class EmbeddingCacheDir {
 public:
  EmbeddingCacheDir(const RunConfig& cfg, const Backend& backend, const AdapterParams* adapter,
                    std::vector<std::filesystem::path>& artifacts)
      : cfg_(cfg), backend_(backend), adapter_(adapter), artifacts_(artifacts) {}

  ManifestEmbeddings get(const DatasetManifest& manifest, const std::filesystem::path& manifest_path) {
    const std::string digest = detail::file_digest(manifest_path);
    ManifestEmbeddings out;
    const auto captions_file = file_for("captions", TemplateId::TextEOL, digest);
    const auto videos_file = file_for("videos", cfg_.prompt_variant, digest);
    const auto expected = roles(manifest, Direction::T2V);
    if (auto c = load(captions_file, expected.query_ids), v = load(videos_file, expected.candidate_ids); c && v) {
      out.captions = std::move(*c);
      out.videos = std::move(*v);
    } else {
      EmbeddingStore store;
      out = embed_manifest(manifest, backend_, cfg_.layer, cfg_.prompt_variant, store,
                           {cfg_.fps, cfg_.max_frames}, cfg_.backend.max_in_flight);
      if (adapter_) {
        for (auto& e : out.captions) e = apply_adapter(*adapter_, e);
        for (auto& e : out.videos) e = apply_adapter(*adapter_, e);
      }
      std::filesystem::create_directories(cfg_.output_dir / "cache");
      cache_write(cfg_.output_dir / captions_file, out.captions);
      cache_write(cfg_.output_dir / videos_file, out.videos);
    }
    artifacts_.push_back(captions_file);
    artifacts_.push_back(videos_file);
    return out;
  }

 private:
  std::filesystem::path file_for(const std::string& role, TemplateId tmpl, const std::string& digest) const {
    const nlohmann::json key = {{"backend", backend_.fingerprint()},
                                {"layer", cfg_.layer},
                                {"template", std::string(to_string(tmpl))},
                                {"fps", format_g9(cfg_.fps)},
                                {"max_frames", cfg_.max_frames},
                                {"adapter", adapter_ ? adapter_hash(adapter_) : std::string("none")},
                                {"dataset", digest},
                                {"role", role}};
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(key.dump())));
    return std::filesystem::path("cache") / (role + "-L" + std::to_string(cfg_.layer) + "-" + buf + ".vvec");
  }

  std::optional<std::vector<Embedding>> load(const std::filesystem::path& rel,
                                             const std::vector<std::string>& ids) const {
    const auto path = cfg_.output_dir / rel;
    if (!std::filesystem::exists(path)) return std::nullopt;
    try {
      auto es = cache_read(path);
      if (es.size() != ids.size()) return std::nullopt;
      for (std::size_t i = 0; i < ids.size(); ++i)
        if (es[i].item_id != ids[i]) return std::nullopt;
      return es;
    } catch (const CacheError&) {
      return std::nullopt;  // rebuilt below
    }
  }

  const RunConfig& cfg_;
  const Backend& backend_;
  const AdapterParams* adapter_;
  std::vector<std::filesystem::path>& artifacts_;
};

}  // namespace detail

struct LoadedRun {
  DatasetManifest manifest;
  std::shared_ptr<const Backend> backend;
  std::optional<AdapterParams> adapter;
};

inline LoadedRun load_run(const RunConfig& cfg) {
  validate(cfg);
  LoadedRun run;
  run.manifest = run_stage("ingest", [&] { return read_manifest(cfg.manifest); });
  run.backend = make_backend(cfg.backend);
  run_stage("backend", [&] {
    const auto d = run.backend->descriptor();
    if (cfg.layer >= d.num_layers)
      throw ConfigError("layer " + std::to_string(cfg.layer) + " is out of range for backend '" + d.name +
                        "' with " + std::to_string(d.num_layers) + " layers");
    if (!cfg.adapter.empty()) {
      run.adapter = load_adapter(cfg.adapter);
      if (run.adapter->dim() != d.dim)
        throw ConfigError("adapter dim " + std::to_string(run.adapter->dim()) + " does not match backend dim " +
                          std::to_string(d.dim));
    }
    return 0;
  });
  return run;
}

// Embedding stage only; returns the cache files written or reused.
inline std::vector<std::filesystem::path> run_embed(const RunConfig& cfg) {
  auto run = load_run(cfg);
  std::vector<std::filesystem::path> artifacts;
  run_stage("embed", [&] {
    detail::EmbeddingCacheDir caches(cfg, *run.backend, run.adapter ? &*run.adapter : nullptr, artifacts);
    caches.get(run.manifest, cfg.manifest);
    return 0;
  });
  return artifacts;
}

// embed -> evaluate -> optional rerank -> re-evaluate; writes report.json,
// report.txt and artifacts.json into output_dir, all tagged with the config hash.
inline PipelineResult run_pipeline(const RunConfig& cfg) {
  auto run = load_run(cfg);
  const Backend& backend = *run.backend;
  const AdapterParams* adapter = run.adapter ? &*run.adapter : nullptr;
  std::filesystem::create_directories(cfg.output_dir);

  PipelineResult result;
  result.config_hash = config_hash(cfg);
  detail::EmbeddingCacheDir caches(cfg, backend, adapter, result.artifacts);

  const auto emb = run_stage("embed", [&] { return caches.get(run.manifest, cfg.manifest); });
  const bool t2v = cfg.direction == Direction::T2V;

  CalibrationConfig calib = cfg.calibration;
  if (calib.enabled && !cfg.tune_manifest.empty()) {
    run_stage("calibrate", [&] {
      const auto val = read_manifest(cfg.tune_manifest);
      const auto val_emb = caches.get(val, cfg.tune_manifest);
      const auto sim = manifest_similarity(val, t2v ? val_emb.captions : val_emb.videos,
                                           t2v ? val_emb.videos : val_emb.captions, cfg.direction, cfg.threads);
      const double t = tune_temperature(sim, val.positives(cfg.direction));
      (t2v ? calib.temperature_t2v : calib.temperature_v2t) = t;
      return 0;
    });
  }
  if (calib.enabled) result.temperature = calib.temperature(cfg.direction);

  const auto positives = run.manifest.positives(cfg.direction);
  auto ranked = run_stage("evaluate", [&] {
    const auto sim = manifest_similarity(run.manifest, t2v ? emb.captions : emb.videos,
                                         t2v ? emb.videos : emb.captions, cfg.direction, cfg.threads);
    return rank(scoring_matrix(sim, cfg.direction, calib), cfg.threads);
  });
  result.first = report_from_ranked(ranked, positives, cfg.direction, calib.enabled);

  if (cfg.rerank) {
    result.reranked = run_stage("rerank", [&] {
      std::unordered_map<std::string, PairInput> captions, videos;
      for (const auto& it : run.manifest.items) {
        videos.emplace(it.item_id, MediaSpec{it.media_ref, cfg.fps, cfg.max_frames});
        for (std::size_t k = 0; k < it.captions.size(); ++k)
          captions.emplace(DatasetManifest::caption_id(it.item_id, k), it.captions[k]);
      }
      auto& queries = t2v ? captions : videos;
      auto& candidates = t2v ? videos : captions;
      const auto progress_name = "rerank_progress-" + result.config_hash + ".jsonl";
      ProgressLog progress(cfg.output_dir / progress_name);
      std::vector<RankedList> reranked;
      reranked.reserve(ranked.size());
      for (const auto& list : ranked)
        reranked.push_back(rerank(queries.at(list.query_id), list, *cfg.rerank, backend,
                                  [&](const std::string& id) { return candidates.at(id); }, &progress));
      result.artifacts.emplace_back(progress_name);
      return report_from_ranked(reranked, positives, cfg.direction, calib.enabled);
    });
  }

  run_stage("report", [&] {
    nlohmann::json stages = {{"first", report_to_json(result.first)}};
    if (result.reranked) stages["reranked"] = report_to_json(*result.reranked);
    nlohmann::json report = {{"config_hash", result.config_hash},
                             {"config", config_to_json(cfg)},
                             {"backend", wire::descriptor_json(backend.descriptor())},
                             {"stages", stages}};
    if (result.temperature) report["temperature"] = *result.temperature;
    detail::write_text(cfg.output_dir / "report.json", report.dump(2) + "\n");

    std::vector<std::pair<std::string, EvalReport>> rows{{"first", result.first}};
    if (result.reranked) rows.emplace_back("reranked", *result.reranked);
    detail::write_text(cfg.output_dir / "report.txt", "# config " + result.config_hash + "\n" + format_table(rows));

    result.artifacts.emplace_back("report.json");
    result.artifacts.emplace_back("report.txt");
    nlohmann::json files = nlohmann::json::array();
    for (const auto& a : result.artifacts) files.push_back(a.generic_string());
    detail::write_text(cfg.output_dir / "artifacts.json",
                       nlohmann::json{{"config_hash", result.config_hash}, {"files", files}}.dump(2) + "\n");
    result.artifacts.emplace_back("artifacts.json");
    return 0;
  });
  return result;
}

}  // namespace vidvec
