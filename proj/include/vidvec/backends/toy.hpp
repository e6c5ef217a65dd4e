#pragma once

// Seeded toy transformer: 4 pre-norm blocks, width 32, one attention head,
// whitespace tokenizer hashed into a 257-entry vocabulary.
//
// The weights are planted rather than random so that retrieval behaviour is
// known in advance:
//   * width layout: [0,16) token content, [16,24) visual nuisance, [24,32) segment tags
//   * every block's head attends from each position to the content tokens seen so far
//   * blocks 0-1 write a random mix of content and nuisance into the nuisance lanes
//   * block 2 writes a clean high-gain copy of the pooled content lanes, which
//     aligns a caption with the video whose locator it mentions
//   * block 3 has a high-frequency sine MLP that scrambles that alignment
// A video locator L becomes min(frames(L, fps), max_frames) frame vectors,
// each the vocabulary embedding of L plus a per-video nuisance vector plus
// per-frame jitter, all drawn from SplitMix64 streams keyed by (seed, L, frame).
//
// score_yes runs the rerank prompt through all blocks and reads Yes/yes from a
// random output head, with a token-matching feature between the query and
// candidate segments added to both affirmative logits.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "vidvec/backends/backend.hpp"
#include "vidvec/core/hash.hpp"

namespace vidvec {

class ToyBackend final : public Backend {
 public:
  static constexpr int kDim = 32;
  static constexpr int kLayers = 4;
  static constexpr int kVocab = 257;
  static constexpr int kHidden = 64;
  static constexpr int kPlantedLayer = 2;

  struct Options {
    std::uint64_t seed = 0x5eed;
    bool supports_scoring = true;
  };

  ToyBackend() : ToyBackend(Options{}) {}
  explicit ToyBackend(Options opts) : opts_(opts) { init_weights(); }

  BackendDescriptor descriptor() const override {
    return {"toy", kLayers, kDim, true, opts_.supports_scoring};
  }

  Embedding embed_text(const std::string& text, TemplateId tmpl, int layer) const override {
    check_layer(layer);
    check_text_template(tmpl);
    auto seq = eol_sequence(PromptTemplate::make(tmpl), text_tokens(text));
    return readout(std::move(seq), layer, Modality::Text, text);
  }

  Embedding embed_video(const MediaSpec& media, TemplateId tmpl, int layer) const override {
    check_layer(layer);
    check_video_template(tmpl);
    validate(media);
    auto seq = eol_sequence(PromptTemplate::make(tmpl), video_tokens(media));
    return readout(std::move(seq), layer, Modality::Video, media.locator);
  }

  double score_yes(const PairInput& query, const PairInput& candidate, TemplateId tmpl) const override {
    check_scoring(tmpl);
    const auto q = content_tokens(query);
    const auto c = content_tokens(candidate);

    Sequence seq;
    append_words(seq, prompts::kRerankQuery, false);
    seq.insert(seq.end(), q.begin(), q.end());
    append_words(seq, prompts::kRerankCandidate, false);
    seq.insert(seq.end(), c.begin(), c.end());
    append_words(seq, prompts::kRerankQuestion, false);
    for (int b = 0; b < kLayers; ++b) apply_block(blocks_[static_cast<std::size_t>(b)], seq);

    const Vec h = seq.back().x / seq.back().x.norm();
    Eigen::Matrix<double, kVocab, 1> logits = lm_head_ * h;
    const double boost = kMatchGain * (match_feature(q, c) - kMatchOffset);
    logits(yes_upper_) += boost;
    if (yes_lower_ != yes_upper_) logits(yes_lower_) += boost;

    const double mx = logits.maxCoeff();
    const auto e = (logits.array() - mx).exp();
    double p = e(yes_upper_);
    if (yes_lower_ != yes_upper_) p += e(yes_lower_);
    return std::clamp(p / e.sum(), 0.0, 1.0);
  }

  std::string fingerprint() const override { return "toy:seed=" + std::to_string(opts_.seed); }
  unsigned max_in_flight() const override { return 8; }

  static int token_id(std::string_view word) {
    return static_cast<int>(fnv1a64(word) % static_cast<std::uint64_t>(kVocab));
  }

  // Natural frame count of a locator at the given fps, before the max_frames cap.
  static int natural_frames(const std::string& locator, double fps) {
    const double seconds = 4.0 + static_cast<double>(fnv1a64(locator) % 13);
    return std::max(1, static_cast<int>(std::floor(seconds * fps)));
  }

 private:
  using Vec = Eigen::Matrix<double, kDim, 1>;
  using Mat = Eigen::Matrix<double, kDim, kDim>;

  struct Token {
    Vec x;
    bool content = false;
  };
  using Sequence = std::vector<Token>;

  struct Block {
    Mat wq = Mat::Zero(), wk = Mat::Zero(), wv = Mat::Zero(), wo = Mat::Identity();
    Eigen::Matrix<double, kHidden, kDim> w1 = Eigen::Matrix<double, kHidden, kDim>::Zero();
    Eigen::Matrix<double, kDim, kHidden> w2 = Eigen::Matrix<double, kDim, kHidden>::Zero();
    bool sine = false;
  };

  static constexpr int kContentLanes = 16;
  static constexpr int kNuisanceBegin = 16;
  static constexpr int kNuisanceEnd = 24;
  static constexpr int kContentTag = 24;
  static constexpr int kInstructionTag = 25;
  static constexpr double kAttentionSharpness = 40.0;
  static constexpr double kMixGain = 1.5;
  static constexpr double kPlantedGain = 8.0;
  static constexpr double kScrambleFrequency = 15.0;
  static constexpr double kScrambleGain = 40.0;
  static constexpr double kNuisanceScale = 1.0;
  static constexpr double kJitterScale = 0.3;
  static constexpr double kMatchGain = 20.0;
  static constexpr double kMatchOffset = 0.4;

  SplitMix64 stream(std::string_view tag, std::uint64_t a = 0, std::uint64_t b = 0) const {
    return SplitMix64(hash_combine(hash_combine(opts_.seed ^ fnv1a64(tag), a), b));
  }

  // Unit-norm Gaussian vector over lanes [begin, end).
  static Vec gaussian_unit(SplitMix64& g, int begin, int end) {
    Vec v = Vec::Zero();
    for (int i = begin; i < end; ++i) v(i) = g.normal();
    return v / v.norm();
  }

  void init_weights() {
    for (int t = 0; t < kVocab; ++t) {
      auto g = stream("vocab", static_cast<std::uint64_t>(t));
      vocab_.row(t) = gaussian_unit(g, 0, kContentLanes).transpose();
    }
    for (int b = 0; b < kLayers; ++b) {
      auto& blk = blocks_[static_cast<std::size_t>(b)];
      auto g = stream("block", static_cast<std::uint64_t>(b));
      blk.wq(kContentTag, kContentTag) = kAttentionSharpness;
      blk.wq(kContentTag, kInstructionTag) = kAttentionSharpness;
      blk.wk(kContentTag, kContentTag) = 1.0;

      if (b < kPlantedLayer) {
        for (int r = kNuisanceBegin; r < kNuisanceEnd; ++r)
          for (int c = 0; c < kNuisanceEnd; ++c) blk.wv(r, c) = g.normal() * kMixGain / std::sqrt(24.0);
      } else if (b == kPlantedLayer) {
        for (int r = 0; r < kContentLanes; ++r) blk.wv(r, r) = kPlantedGain;
      } else {
        for (int r = 0; r < kNuisanceEnd; ++r)
          for (int c = 0; c < kNuisanceEnd; ++c) blk.wv(r, c) = g.normal() * 0.5 / std::sqrt(24.0);
      }

      const bool scramble = b == kLayers - 1;
      blk.sine = scramble;
      const double in_scale = scramble ? kScrambleFrequency : 1.0;
      const double out_scale = scramble ? kScrambleGain / std::sqrt(double(kHidden)) : 0.2 / std::sqrt(double(kHidden));
      for (int r = 0; r < kHidden; ++r)
        for (int c = 0; c < kDim; ++c) blk.w1(r, c) = g.normal() * in_scale;
      for (int r = 0; r < kNuisanceEnd; ++r)
        for (int c = 0; c < kHidden; ++c) blk.w2(r, c) = g.normal() * out_scale;
    }
    auto g = stream("lm_head");
    for (int r = 0; r < kVocab; ++r)
      for (int c = 0; c < kDim; ++c) lm_head_(r, c) = g.normal();
    yes_upper_ = token_id("Yes");
    yes_lower_ = token_id("yes");
  }

  static Vec tag(bool content) {
    Vec v = Vec::Zero();
    v(content ? kContentTag : kInstructionTag) = 1.0;
    return v;
  }

  void append_words(Sequence& seq, std::string_view text, bool content) const {
    std::istringstream in{std::string(text)};
    std::string word;
    while (in >> word) seq.push_back({vocab_.row(token_id(word)).transpose() + tag(content), content});
  }

  Sequence text_tokens(const std::string& text) const {
    Sequence seq;
    append_words(seq, text, true);
    return seq;
  }

  Sequence video_tokens(const MediaSpec& media) const {
    const int n = std::min(natural_frames(media.locator, media.fps), media.max_frames);
    const Vec key = vocab_.row(token_id(media.locator)).transpose();
    auto ng = stream("nuisance", fnv1a64(media.locator));
    const Vec nuisance = gaussian_unit(ng, kNuisanceBegin, kNuisanceEnd) * kNuisanceScale;
    Sequence seq;
    seq.reserve(static_cast<std::size_t>(n));
    for (int f = 0; f < n; ++f) {
      auto jg = stream("frame", fnv1a64(media.locator), static_cast<std::uint64_t>(f));
      const Vec jitter = gaussian_unit(jg, 0, kNuisanceEnd) * kJitterScale;
      seq.push_back({key + nuisance + jitter + tag(true), true});
    }
    return seq;
  }

  Sequence content_tokens(const PairInput& in) const {
    if (const auto* text = std::get_if<std::string>(&in)) return text_tokens(*text);
    return video_tokens(std::get<MediaSpec>(in));
  }

  Sequence eol_sequence(const PromptTemplate& tmpl, Sequence content) const {
    auto [before, after] = tmpl.content_split();
    Sequence seq;
    append_words(seq, before, false);
    seq.insert(seq.end(), content.begin(), content.end());
    append_words(seq, after, false);
    return seq;
  }

  static void apply_block(const Block& blk, Sequence& seq) {
    const std::size_t n = seq.size();
    std::vector<Vec> q(n), k(n), v(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Vec x = seq[i].x / seq[i].x.norm();
      q[i] = blk.wq * x;
      k[i] = blk.wk * x;
      v[i] = blk.wv * x;
    }
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) {
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j <= i; ++j) mx = std::max(mx, w[j] = q[i].dot(k[j]));
      double sum = 0.0;
      Vec acc = Vec::Zero();
      for (std::size_t j = 0; j <= i; ++j) {
        const double e = std::exp(w[j] - mx);
        sum += e;
        acc += e * v[j];
      }
      seq[i].x += blk.wo * (acc / sum);
    }
    for (auto& t : seq) {
      const Vec h = t.x / t.x.norm();
      Eigen::Matrix<double, kHidden, 1> a = blk.w1 * h;
      if (blk.sine)
        a = a.array().sin().matrix();
      else
        a = a.array().tanh().matrix();
      t.x += blk.w2 * a;
    }
  }

  Embedding readout(Sequence seq, int layer, Modality modality, const std::string& id) const {
    VIDVEC_REQUIRE(!seq.empty(), "empty prompt");
    for (int b = 0; b <= layer; ++b) apply_block(blocks_[static_cast<std::size_t>(b)], seq);
    Embedding e;
    e.values.resize(kDim);
    for (int i = 0; i < kDim; ++i) e.values[static_cast<std::size_t>(i)] = static_cast<float>(seq.back().x(i));
    e.layer = layer;
    e.modality = modality;
    e.item_id = id;
    return e;
  }

  // Best cosine between any query token and any candidate token over the
  // content and nuisance lanes of the input features.
  static double match_feature(const Sequence& q, const Sequence& c) {
    double best = -1.0;
    for (const auto& a : q) {
      const auto av = a.x.head<kNuisanceEnd>();
      for (const auto& b : c) {
        const auto bv = b.x.head<kNuisanceEnd>();
        best = std::max(best, av.dot(bv) / (av.norm() * bv.norm()));
      }
    }
    return best;
  }

  Options opts_;
  Eigen::Matrix<double, kVocab, kDim> vocab_ = Eigen::Matrix<double, kVocab, kDim>::Zero();
  std::array<Block, kLayers> blocks_{};
  Eigen::Matrix<double, kVocab, kDim> lm_head_ = Eigen::Matrix<double, kVocab, kDim>::Zero();
  int yes_upper_ = 0;
  int yes_lower_ = 0;
};

}  // namespace vidvec
