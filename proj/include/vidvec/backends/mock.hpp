#pragma once

// Hash-based mock backend. Outputs are fixed functions of the inputs:
//
//   key(text)  = "text"  US tmpl US layer US text
//   key(video) = "video" US tmpl US layer US locator US fps("%.9g") US max_frames
//   g          = SplitMix64(fnv1a64(key) ^ seed)
//   embedding  = [float(2 * u - 1) for each of dim draws], u = (g.next() >> 11) * 2^-53
//
//   p_yes = u of SplitMix64(fnv1a64("score" US side(q) RS side(c)) ^ seed),
//   side(text) = "t:" text, side(video) = "v:" locator
//
// US = '\x1f', RS = '\x1e', tmpl is the wire template id.

#include <cstdio>
#include <string>

#include "vidvec/backends/backend.hpp"
#include "vidvec/core/hash.hpp"

namespace vidvec {

inline std::string format_g9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

class MockBackend final : public Backend {
 public:
  struct Options {
    std::uint64_t seed = 0;
    int num_layers = 28;
    int dim = 64;
    bool supports_scoring = true;
  };

  MockBackend() : MockBackend(Options{}) {}
  explicit MockBackend(Options opts) : opts_(opts) {
    VIDVEC_REQUIRE(opts_.num_layers >= 1 && opts_.dim >= 1, "mock backend needs positive shape");
  }

  BackendDescriptor descriptor() const override {
    return {"mock", opts_.num_layers, opts_.dim, true, opts_.supports_scoring};
  }

  Embedding embed_text(const std::string& text, TemplateId tmpl, int layer) const override {
    check_layer(layer);
    check_text_template(tmpl);
    const std::string key = join({"text", std::string(to_string(tmpl)), std::to_string(layer), text});
    return expand(key, layer, Modality::Text, text);
  }

  Embedding embed_video(const MediaSpec& media, TemplateId tmpl, int layer) const override {
    check_layer(layer);
    check_video_template(tmpl);
    validate(media);
    const std::string key = join({"video", std::string(to_string(tmpl)), std::to_string(layer),
                                  media.locator, format_g9(media.fps), std::to_string(media.max_frames)});
    return expand(key, layer, Modality::Video, media.locator);
  }

  double score_yes(const PairInput& query, const PairInput& candidate, TemplateId tmpl) const override {
    check_scoring(tmpl);
    const std::string key = "score\x1f" + side(query) + "\x1e" + side(candidate);
    SplitMix64 g(fnv1a64(key) ^ opts_.seed);
    return g.uniform01();
  }

  std::string fingerprint() const override {
    return "mock:seed=" + std::to_string(opts_.seed) + ":layers=" + std::to_string(opts_.num_layers) +
           ":dim=" + std::to_string(opts_.dim);
  }

  unsigned max_in_flight() const override { return 8; }

 private:
  static std::string join(std::initializer_list<std::string> parts) {
    std::string out;
    bool first = true;
    for (const auto& p : parts) {
      if (!first) out.push_back('\x1f');
      out += p;
      first = false;
    }
    return out;
  }

  static std::string side(const PairInput& in) {
    if (const auto* text = std::get_if<std::string>(&in)) return "t:" + *text;
    return "v:" + std::get<MediaSpec>(in).locator;
  }

  Embedding expand(const std::string& key, int layer, Modality modality, const std::string& id) const {
    SplitMix64 g(fnv1a64(key) ^ opts_.seed);
    Embedding e;
    e.values.resize(static_cast<std::size_t>(opts_.dim));
    for (auto& v : e.values) v = static_cast<float>(g.symmetric());
    e.layer = layer;
    e.modality = modality;
    e.item_id = id;
    return e;
  }

  Options opts_;
};

}  // namespace vidvec
