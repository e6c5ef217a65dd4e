#pragma once

// JSON wire protocol shared with the reference embedding server.
//
//   POST /v1/embed       {"content","layer","media"?,"modality","template_id"}
//                        -> {"dim","embedding":[...],"layer"}
//   POST /v1/score       {"candidate":{..},"query":{..},"template_id":"yes_no_rerank"}
//                        -> {"p_yes"}
//   GET  /v1/descriptor  -> {"dim","name","num_layers","supports_layers","supports_scoring"}
//   errors               -> {"error":{"code","message"}}
//
// Serialization is canonical: keys sorted, no whitespace, floats printed with
// 9 significant digits ("%.9g"), integers verbatim.

#include <cmath>
#include <cstdio>
#include <string>

#include <json.hpp>

#include "vidvec/backends/prompt.hpp"
#include "vidvec/core/errors.hpp"
#include "vidvec/core/types.hpp"

namespace vidvec::wire {

using json = nlohmann::json;

// Malformed or unacceptable protocol message; `code` is the wire error code.
class ProtocolError : public ContractError {
 public:
  ProtocolError(std::string code, const std::string& message)
      : ContractError(code + ": " + message), code_(std::move(code)), message_(message) {}
  const std::string& code() const noexcept { return code_; }
  const std::string& message() const noexcept { return message_; }

 private:
  std::string code_;
  std::string message_;
};

namespace detail {

inline void dump_canonical(const json& j, std::string& out) {
  switch (j.type()) {
    case json::value_t::null: out += "null"; break;
    case json::value_t::boolean: out += j.get<bool>() ? "true" : "false"; break;
    case json::value_t::number_integer: out += std::to_string(j.get<std::int64_t>()); break;
    case json::value_t::number_unsigned: out += std::to_string(j.get<std::uint64_t>()); break;
    case json::value_t::number_float: {
      const double v = j.get<double>();
      if (!std::isfinite(v)) throw ContractError("cannot serialize a non-finite number");
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.9g", v);
      out += buf;
      break;
    }
    case json::value_t::string: out += j.dump(); break;
    case json::value_t::array: {
      out.push_back('[');
      bool first = true;
      for (const auto& e : j) {
        if (!first) out.push_back(',');
        dump_canonical(e, out);
        first = false;
      }
      out.push_back(']');
      break;
    }
    case json::value_t::object: {
      // nlohmann's default object type is an ordered std::map, so iteration is sorted.
      out.push_back('{');
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out.push_back(',');
        out += json(it.key()).dump();
        out.push_back(':');
        dump_canonical(it.value(), out);
        first = false;
      }
      out.push_back('}');
      break;
    }
    default: throw ContractError("unsupported JSON value in canonical serialization");
  }
}

inline const json& field(const json& j, const char* key) {
  if (!j.is_object()) throw ProtocolError("bad_request", "expected a JSON object");
  auto it = j.find(key);
  if (it == j.end()) throw ProtocolError("missing_field", std::string("missing field '") + key + "'");
  return *it;
}

template <class T>
T typed(const json& j, const char* key) {
  const auto& v = field(j, key);
  try {
    if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) throw ProtocolError("bad_request", std::string("field '") + key + "' must be a number");
    } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
      if (!v.is_number_integer()) throw ProtocolError("bad_request", std::string("field '") + key + "' must be an integer");
    }
    return v.get<T>();
  } catch (const json::exception&) {
    throw ProtocolError("bad_request", std::string("field '") + key + "' has the wrong type");
  }
}

}  // namespace detail

inline std::string canonical(const json& j) {
  std::string out;
  detail::dump_canonical(j, out);
  return out;
}

inline json parse(std::string_view body) {
  try {
    return json::parse(body);
  } catch (const json::parse_error&) {
    throw ProtocolError("bad_json", "body is not valid JSON");
  }
}

inline json media_json(const MediaSpec& m) {
  return {{"locator", m.locator}, {"fps", m.fps}, {"max_frames", m.max_frames}};
}

inline MediaSpec media_from_json(const json& j) {
  MediaSpec m;
  m.locator = detail::typed<std::string>(j, "locator");
  m.fps = detail::typed<double>(j, "fps");
  m.max_frames = detail::typed<int>(j, "max_frames");
  if (m.fps <= 0.0 || m.max_frames <= 0) throw ProtocolError("bad_request", "media fps and max_frames must be positive");
  return m;
}

inline json input_json(const PairInput& in) {
  if (const auto* text = std::get_if<std::string>(&in)) return {{"modality", "text"}, {"content", *text}};
  const auto& m = std::get<MediaSpec>(in);
  return {{"modality", "video"}, {"content", m.locator}, {"media", media_json(m)}};
}

inline PairInput input_from_json(const json& j) {
  const auto modality = detail::typed<std::string>(j, "modality");
  if (modality == "text") return detail::typed<std::string>(j, "content");
  if (modality == "video") return media_from_json(detail::field(j, "media"));
  throw ProtocolError("bad_request", "modality must be 'text' or 'video'");
}

struct EmbedRequest {
  PairInput input;
  TemplateId template_id = TemplateId::TextEOL;
  int layer = 0;
};

inline json embed_request_json(const EmbedRequest& r) {
  json j = input_json(r.input);
  j["template_id"] = std::string(to_string(r.template_id));
  j["layer"] = r.layer;
  return j;
}

inline EmbedRequest embed_request_from_json(const json& j) {
  EmbedRequest r;
  r.input = input_from_json(j);
  try {
    r.template_id = template_from_string(detail::typed<std::string>(j, "template_id"));
  } catch (const ProtocolError&) {
    throw;
  } catch (const ContractError& e) {
    throw ProtocolError("bad_request", e.what());
  }
  r.layer = detail::typed<int>(j, "layer");
  return r;
}

struct ScoreRequest {
  PairInput query;
  PairInput candidate;
  TemplateId template_id = TemplateId::YesNoRerank;
};

inline json score_request_json(const ScoreRequest& r) {
  return {{"template_id", std::string(to_string(r.template_id))},
          {"query", input_json(r.query)},
          {"candidate", input_json(r.candidate)}};
}

inline ScoreRequest score_request_from_json(const json& j) {
  ScoreRequest r;
  const auto tmpl = detail::typed<std::string>(j, "template_id");
  if (tmpl != "yes_no_rerank") throw ProtocolError("bad_request", "template_id must be 'yes_no_rerank'");
  r.query = input_from_json(detail::field(j, "query"));
  r.candidate = input_from_json(detail::field(j, "candidate"));
  return r;
}

inline json embed_response_json(const Embedding& e) {
  json values = json::array();
  for (float v : e.values) values.push_back(static_cast<double>(v));
  return {{"embedding", std::move(values)}, {"dim", e.dim()}, {"layer", e.layer}};
}

inline Embedding embed_response_from_json(const json& j, Modality modality, std::string item_id) {
  Embedding e;
  const auto& values = detail::field(j, "embedding");
  if (!values.is_array()) throw ProtocolError("bad_response", "'embedding' must be an array");
  e.values.reserve(values.size());
  for (const auto& v : values) {
    if (!v.is_number()) throw ProtocolError("bad_response", "'embedding' entries must be numbers");
    e.values.push_back(static_cast<float>(v.get<double>()));
  }
  const auto dim = detail::typed<std::size_t>(j, "dim");
  if (dim != e.values.size()) throw ProtocolError("bad_response", "'dim' does not match embedding length");
  e.layer = detail::typed<int>(j, "layer");
  e.modality = modality;
  e.item_id = std::move(item_id);
  return e;
}

inline json score_response_json(double p_yes) { return {{"p_yes", p_yes}}; }

inline double score_response_from_json(const json& j) {
  const double p = detail::typed<double>(j, "p_yes");
  if (!(p >= 0.0 && p <= 1.0)) throw ProtocolError("bad_response", "'p_yes' outside [0, 1]");
  return p;
}

inline json descriptor_json(const BackendDescriptor& d) {
  return {{"name", d.name},
          {"num_layers", d.num_layers},
          {"dim", d.dim},
          {"supports_layers", d.supports_layers},
          {"supports_scoring", d.supports_scoring}};
}

inline BackendDescriptor descriptor_from_json(const json& j) {
  BackendDescriptor d;
  d.name = detail::typed<std::string>(j, "name");
  d.num_layers = detail::typed<int>(j, "num_layers");
  d.dim = detail::typed<int>(j, "dim");
  d.supports_layers = detail::typed<bool>(j, "supports_layers");
  d.supports_scoring = detail::typed<bool>(j, "supports_scoring");
  if (d.num_layers < 1 || d.dim < 1) throw ProtocolError("bad_response", "descriptor shape must be positive");
  return d;
}

inline json error_json(const std::string& code, const std::string& message) {
  return {{"error", {{"code", code}, {"message", message}}}};
}

}  // namespace vidvec::wire
