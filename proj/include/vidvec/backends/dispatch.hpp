#pragma once

// Server side of the wire protocol: maps one HTTP request onto a Backend.
// Used by in-process test servers and by the fixture generator, so the
// shared golden files describe exactly what a conforming server returns.
// Error bodies are only compared on status and error.code; message text is
// free-form.

#include <string>
#include <string_view>

#include "vidvec/backends/backend.hpp"
#include "vidvec/backends/wire.hpp"
#include "vidvec/core/hash.hpp"

namespace vidvec::wire {

struct Response {
  int status = 200;
  std::string body;
};

inline Response error_response(int status, const std::string& code, const std::string& message) {
  return {status, canonical(error_json(code, message))};
}

inline Response dispatch(const Backend& backend, std::string_view method, std::string_view path,
                         std::string_view body) {
  try {
    if (path == "/v1/descriptor") {
      if (method != "GET") return error_response(405, "bad_request", "use GET");
      return {200, canonical(descriptor_json(backend.descriptor()))};
    }
    if (path == "/v1/embed") {
      if (method != "POST") return error_response(405, "bad_request", "use POST");
      const auto req = embed_request_from_json(parse(body));
      Embedding e;
      if (const auto* text = std::get_if<std::string>(&req.input))
        e = backend.embed_text(*text, req.template_id, req.layer);
      else
        e = backend.embed_video(std::get<MediaSpec>(req.input), req.template_id, req.layer);
      return {200, canonical(embed_response_json(e))};
    }
    if (path == "/v1/score") {
      if (method != "POST") return error_response(405, "bad_request", "use POST");
      const auto req = score_request_from_json(parse(body));
      return {200, canonical(score_response_json(backend.score_yes(req.query, req.candidate, req.template_id)))};
    }
    return error_response(404, "not_found", std::string(path));
  } catch (const ProtocolError& e) {
    return error_response(400, e.code(), e.message());
  } catch (const CapabilityError& e) {
    return error_response(501, "unsupported", e.what());
  } catch (const ContractError& e) {
    return error_response(400, "bad_request", e.what());
  } catch (const std::exception& e) {
    char id[17];
    std::snprintf(id, sizeof id, "%016llx", static_cast<unsigned long long>(fnv1a64(e.what())));
    return error_response(500, "internal", std::string("error id ") + id);
  }
}

}  // namespace vidvec::wire
