#pragma once

#include <utility>
#include <vector>

#include "vidvec/retrieval/evaluate.hpp"
#include "vidvec/sweep/embedding_store.hpp"

namespace vidvec {

struct SweepOptions {
  Direction direction = Direction::T2V;
  TemplateId prompt_variant = TemplateId::VideoEOL;
  CalibrationConfig calibration{};  // off by default
  MediaDefaults media{};
  unsigned threads = 0;
};

using LayerReport = std::pair<int, EvalReport>;

// Zero-shot readout quality per layer. No parameters are trained; reports
// come back in the order of `layers`.
inline std::vector<LayerReport> sweep(const DatasetManifest& manifest, const Backend& backend,
                                      const std::vector<int>& layers, const SweepOptions& opts,
                                      EmbeddingStore& store) {
  validate(manifest);
  VIDVEC_REQUIRE(is_video_template(opts.prompt_variant), "sweep prompt variant must be a video template");
  const auto desc = backend.descriptor();
  if (!desc.supports_layers) {
    for (int layer : layers)
      if (layer != desc.num_layers - 1)
        throw CapabilityError("backend '" + desc.name + "' does not support layer selection");
  }
  for (int layer : layers)
    VIDVEC_REQUIRE(layer >= 0 && layer < desc.num_layers,
                   "sweep layer " + std::to_string(layer) + " out of range for backend '" + desc.name + "'");

  std::vector<LayerReport> out;
  out.reserve(layers.size());
  for (int layer : layers) {
    const auto emb = embed_manifest(manifest, backend, layer, opts.prompt_variant, store, opts.media, opts.threads);
    const bool t2v = opts.direction == Direction::T2V;
    out.emplace_back(layer, evaluate(manifest, t2v ? emb.captions : emb.videos, t2v ? emb.videos : emb.captions,
                                     opts.direction, opts.calibration));
  }
  return out;
}

inline std::vector<int> all_layers(const Backend& backend) {
  std::vector<int> layers(static_cast<std::size_t>(backend.descriptor().num_layers));
  for (std::size_t i = 0; i < layers.size(); ++i) layers[i] = static_cast<int>(i);
  return layers;
}

}  // namespace vidvec
