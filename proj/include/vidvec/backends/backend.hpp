#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>

#include "vidvec/backends/prompt.hpp"
#include "vidvec/core/types.hpp"

namespace vidvec {

// Model-access contract. Implementations must be safe for concurrent calls
// and deterministic for a fixed configuration.
class Backend {
 public:
  virtual ~Backend() = default;

  virtual BackendDescriptor descriptor() const = 0;

  // Hidden state at the position before the embedding marker, read after block `layer`.
  virtual Embedding embed_text(const std::string& text, TemplateId tmpl, int layer) const = 0;
  virtual Embedding embed_video(const MediaSpec& media, TemplateId tmpl, int layer) const = 0;

  // P(Yes) + P(yes) at the answer position of the rerank prompt.
  virtual double score_yes(const PairInput& query, const PairInput& candidate,
                           TemplateId tmpl) const = 0;

  // Identity of the backend for cache keys (name plus anything that changes outputs).
  virtual std::string fingerprint() const { return descriptor().name; }

  // Upper bound on useful concurrent calls.
  virtual unsigned max_in_flight() const { return 1; }

 protected:
  void check_layer(int layer) const {
    const auto d = descriptor();
    if (!d.supports_layers && layer != d.num_layers - 1)
      throw CapabilityError("backend '" + d.name + "' does not support layer selection");
    VIDVEC_REQUIRE(layer >= 0 && layer < d.num_layers,
                   "layer " + std::to_string(layer) + " out of range [0, " +
                       std::to_string(d.num_layers) + ") for backend '" + d.name + "'");
  }

  void check_scoring(TemplateId tmpl) const {
    const auto d = descriptor();
    if (!d.supports_scoring)
      throw CapabilityError("backend '" + d.name + "' does not support pair scoring");
    VIDVEC_REQUIRE(tmpl == TemplateId::YesNoRerank, "score_yes requires the yes_no_rerank template");
  }

  static void check_text_template(TemplateId tmpl) {
    VIDVEC_REQUIRE(tmpl == TemplateId::TextEOL, "embed_text requires the text_eol template");
  }
  static void check_video_template(TemplateId tmpl) {
    VIDVEC_REQUIRE(is_video_template(tmpl), "embed_video requires a video_eol template");
  }
};

// Decorator counting calls that reach the wrapped backend.
class CountingBackend final : public Backend {
 public:
  explicit CountingBackend(std::shared_ptr<const Backend> inner) : inner_(std::move(inner)) {}

  BackendDescriptor descriptor() const override { return inner_->descriptor(); }
  Embedding embed_text(const std::string& text, TemplateId tmpl, int layer) const override {
    ++embed_calls_;
    return inner_->embed_text(text, tmpl, layer);
  }
  Embedding embed_video(const MediaSpec& media, TemplateId tmpl, int layer) const override {
    ++embed_calls_;
    return inner_->embed_video(media, tmpl, layer);
  }
  double score_yes(const PairInput& q, const PairInput& c, TemplateId tmpl) const override {
    ++score_calls_;
    return inner_->score_yes(q, c, tmpl);
  }
  std::string fingerprint() const override { return inner_->fingerprint(); }
  unsigned max_in_flight() const override { return inner_->max_in_flight(); }

  std::uint64_t embed_calls() const noexcept { return embed_calls_.load(); }
  std::uint64_t score_calls() const noexcept { return score_calls_.load(); }
  std::uint64_t total_calls() const noexcept { return embed_calls() + score_calls(); }
  void reset() noexcept {
    embed_calls_ = 0;
    score_calls_ = 0;
  }

 private:
  std::shared_ptr<const Backend> inner_;
  mutable std::atomic<std::uint64_t> embed_calls_{0};
  mutable std::atomic<std::uint64_t> score_calls_{0};
};

}  // namespace vidvec
