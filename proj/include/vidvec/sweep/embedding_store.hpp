#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "vidvec/backends/backend.hpp"
#include "vidvec/backends/mock.hpp"
#include "vidvec/core/parallel.hpp"

namespace vidvec {

// Memoizes backend embeddings by (backend fingerprint, layer, template, content).
class EmbeddingStore {
 public:
  Embedding text(const Backend& backend, const std::string& content, int layer) {
    return lookup(backend, layer, TemplateId::TextEOL, "t:" + content,
                  [&] { return backend.embed_text(content, TemplateId::TextEOL, layer); });
  }

  Embedding video(const Backend& backend, const MediaSpec& media, TemplateId tmpl, int layer) {
    const std::string key =
        "v:" + media.locator + "\x1f" + format_g9(media.fps) + "\x1f" + std::to_string(media.max_frames);
    return lookup(backend, layer, tmpl, key, [&] { return backend.embed_video(media, tmpl, layer); });
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
  }

  std::uint64_t hits() const {
    std::lock_guard lock(mutex_);
    return hits_;
  }

 private:
  using Key = std::tuple<std::string, int, TemplateId, std::string>;

  template <class Fn>
  Embedding lookup(const Backend& backend, int layer, TemplateId tmpl, std::string content, Fn&& compute) {
    Key key{backend.fingerprint(), layer, tmpl, std::move(content)};
    {
      std::lock_guard lock(mutex_);
      if (auto it = entries_.find(key); it != entries_.end()) {
        ++hits_;
        return it->second;
      }
    }
    Embedding e = compute();
    std::lock_guard lock(mutex_);
    return entries_.emplace(std::move(key), std::move(e)).first->second;
  }

  mutable std::mutex mutex_;
  std::map<Key, Embedding> entries_;
  std::uint64_t hits_ = 0;
};

struct MediaDefaults {
  double fps = 2.0;
  int max_frames = 180;
};

struct ManifestEmbeddings {
  std::vector<Embedding> captions;  // item_id = caption id
  std::vector<Embedding> videos;    // item_id = manifest item id
};

// Embeds every caption (text template) and every video (`video_template`) of
// a manifest at one layer.
inline ManifestEmbeddings embed_manifest(const DatasetManifest& manifest, const Backend& backend, int layer,
                                         TemplateId video_template, EmbeddingStore& store,
                                         MediaDefaults media = {}, unsigned threads = 0) {
  struct Job {
    bool is_video;
    std::size_t item;
    std::size_t caption;
  };
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < manifest.items.size(); ++i) {
    jobs.push_back({true, i, 0});
    for (std::size_t k = 0; k < manifest.items[i].captions.size(); ++k) jobs.push_back({false, i, k});
  }
  std::vector<Embedding> results(jobs.size());
  parallel_for(jobs.size(), threads ? threads : backend.max_in_flight(), [&](std::size_t j) {
    const auto& job = jobs[j];
    const auto& item = manifest.items[job.item];
    if (job.is_video) {
      results[j] = store.video(backend, {item.media_ref, media.fps, media.max_frames}, video_template, layer);
      results[j].item_id = item.item_id;
    } else {
      results[j] = store.text(backend, item.captions[job.caption], layer);
      results[j].item_id = DatasetManifest::caption_id(item.item_id, job.caption);
    }
  });
  ManifestEmbeddings out;
  for (std::size_t j = 0; j < jobs.size(); ++j)
    (jobs[j].is_video ? out.videos : out.captions).push_back(std::move(results[j]));
  return out;
}

}  // namespace vidvec
