#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>

#include "vidvec/core/errors.hpp"

namespace vidvec {

enum class TemplateId : std::uint8_t { TextEOL, VideoEOL, VideoEOLPrefixed, YesNoRerank };

inline std::string_view to_string(TemplateId t) {
  switch (t) {
    case TemplateId::TextEOL: return "text_eol";
    case TemplateId::VideoEOL: return "video_eol";
    case TemplateId::VideoEOLPrefixed: return "video_eol_prefixed";
    case TemplateId::YesNoRerank: return "yes_no_rerank";
  }
  return "text_eol";
}

inline TemplateId template_from_string(std::string_view s) {
  if (s == "text_eol") return TemplateId::TextEOL;
  if (s == "video_eol") return TemplateId::VideoEOL;
  if (s == "video_eol_prefixed") return TemplateId::VideoEOLPrefixed;
  if (s == "yes_no_rerank") return TemplateId::YesNoRerank;
  throw ContractError("unknown template id '" + std::string(s) + "'");
}

inline bool is_video_template(TemplateId t) {
  return t == TemplateId::VideoEOL || t == TemplateId::VideoEOLPrefixed;
}

namespace prompts {

inline constexpr std::string_view kTextInstruction = "\nSummarize above sentence in one word: ";
inline constexpr std::string_view kVideoInstruction = "\nSummarize above video in one word: ";
inline constexpr std::string_view kVideoPrefix =
    "Recover the main subject or subjects, appearance and setting, and main activity in the video";
inline constexpr std::string_view kRerankQuery = "Query: ";
inline constexpr std::string_view kRerankCandidate = "\nCandidate: ";
inline constexpr std::string_view kRerankQuestion =
    "\nDoes the candidate match the query? Respond in a single word - Yes or No.";

}  // namespace prompts

// Template text with {content} / {query} / {candidate} placeholders. The EOL
// templates are rendered with the backend's embedding-token marker appended.
struct PromptTemplate {
  TemplateId id = TemplateId::TextEOL;
  std::string body;

  static PromptTemplate make(TemplateId id) {
    using namespace prompts;
    switch (id) {
      case TemplateId::TextEOL:
        return {id, "{content}" + std::string(kTextInstruction)};
      case TemplateId::VideoEOL:
        return {id, "{content}" + std::string(kVideoInstruction)};
      case TemplateId::VideoEOLPrefixed:
        return {id, std::string(kVideoPrefix) + "{content}" + std::string(kVideoInstruction)};
      case TemplateId::YesNoRerank:
        return {id, std::string(kRerankQuery) + "{query}" + std::string(kRerankCandidate) +
                        "{candidate}" + std::string(kRerankQuestion)};
    }
    throw ContractError("unknown template");
  }

  // Text before and after the single {content} slot of an EOL template.
  std::pair<std::string_view, std::string_view> content_split() const {
    const auto pos = body.find("{content}");
    VIDVEC_REQUIRE(pos != std::string::npos, "template has no {content} slot");
    std::string_view v(body);
    return {v.substr(0, pos), v.substr(pos + 9)};
  }

  std::string render(std::string_view content, std::string_view emb_marker) const {
    auto [before, after] = content_split();
    std::string out;
    out.append(before).append(content).append(after).append(emb_marker);
    return out;
  }

  std::string render_pair(std::string_view query, std::string_view candidate) const {
    std::string out = body;
    auto replace = [&](std::string_view key, std::string_view value) {
      const auto pos = out.find(key);
      VIDVEC_REQUIRE(pos != std::string::npos, "template has no " + std::string(key) + " slot");
      out.replace(pos, key.size(), value);
    };
    replace("{query}", query);
    replace("{candidate}", candidate);
    return out;
  }
};

struct MediaSpec {
  std::string locator;
  double fps = 2.0;
  int max_frames = 180;

  bool operator==(const MediaSpec&) const = default;
};

inline void validate(const MediaSpec& m) {
  VIDVEC_REQUIRE(m.fps > 0.0, "media fps must be positive");
  VIDVEC_REQUIRE(m.max_frames > 0, "media max_frames must be positive");
}

// One side of a scored pair: text or a video locator.
using PairInput = std::variant<std::string, MediaSpec>;

struct BackendDescriptor {
  std::string name;
  int num_layers = 1;
  int dim = 1;
  bool supports_layers = true;
  bool supports_scoring = true;

  bool operator==(const BackendDescriptor&) const = default;
};

}  // namespace vidvec
