#pragma once

// Eigen before httplib: <resolv.h> defines a _res macro that clashes with Eigen internals.
#include "vidvec/backends/backend.hpp"

#include <httplib.h>

#include <chrono>
#include <mutex>
#include <optional>
#include <semaphore>
#include <thread>

#include "vidvec/backends/wire.hpp"

namespace vidvec {

// Client for the JSON wire protocol. Transient failures (no response, 429,
// 5xx) are retried with exponential backoff; 4xx responses surface as
// protocol errors, 501 as a capability error.
class RemoteBackend final : public Backend {
 public:
  struct Options {
    std::string endpoint = "http://127.0.0.1:8080";
    unsigned max_in_flight = 8;
    int retries = 3;
    std::chrono::milliseconds backoff_base{200};
    std::chrono::seconds timeout{120};
  };

  explicit RemoteBackend(Options opts)
      : opts_(std::move(opts)), slots_(static_cast<std::ptrdiff_t>(std::max(1u, opts_.max_in_flight))) {
    VIDVEC_REQUIRE(opts_.max_in_flight >= 1 && opts_.max_in_flight <= kMaxSlots,
                   "remote in-flight limit must be in [1, 1024]");
    VIDVEC_REQUIRE(opts_.retries >= 0, "remote retry count must be non-negative");
  }

  BackendDescriptor descriptor() const override {
    std::lock_guard lock(descriptor_mutex_);
    if (!descriptor_) descriptor_ = wire::descriptor_from_json(request("GET", "/v1/descriptor", ""));
    return *descriptor_;
  }

  Embedding embed_text(const std::string& text, TemplateId tmpl, int layer) const override {
    check_layer(layer);
    check_text_template(tmpl);
    return embed({text, tmpl, layer}, Modality::Text, text);
  }

  Embedding embed_video(const MediaSpec& media, TemplateId tmpl, int layer) const override {
    check_layer(layer);
    check_video_template(tmpl);
    validate(media);
    return embed({media, tmpl, layer}, Modality::Video, media.locator);
  }

  double score_yes(const PairInput& query, const PairInput& candidate, TemplateId tmpl) const override {
    check_scoring(tmpl);
    const auto body = wire::canonical(wire::score_request_json({query, candidate, tmpl}));
    return wire::score_response_from_json(request("POST", "/v1/score", body));
  }

  std::string fingerprint() const override {
    const auto d = descriptor();
    return "remote:" + opts_.endpoint + ":" + d.name + ":" + std::to_string(d.num_layers) + "x" +
           std::to_string(d.dim);
  }

  unsigned max_in_flight() const override { return opts_.max_in_flight; }

  // Delays slept before retry attempts 1..retries.
  std::vector<std::chrono::milliseconds> backoff_schedule() const {
    std::vector<std::chrono::milliseconds> out;
    for (int i = 0; i < opts_.retries; ++i) out.push_back(opts_.backoff_base * (1LL << i));
    return out;
  }

  static std::string embed_body(const wire::EmbedRequest& r) {
    return wire::canonical(wire::embed_request_json(r));
  }

 private:
  static constexpr unsigned kMaxSlots = 1024;

  Embedding embed(const wire::EmbedRequest& r, Modality modality, const std::string& id) const {
    auto e = wire::embed_response_from_json(request("POST", "/v1/embed", embed_body(r)), modality, id);
    const auto d = descriptor();
    if (static_cast<int>(e.dim()) != d.dim || e.layer != r.layer)
      throw wire::ProtocolError("bad_response", "embedding shape does not match request/descriptor");
    validate(e);
    return e;
  }

  wire::json request(const char* method, const std::string& path, const std::string& body) const {
    slots_.acquire();
    struct Release {
      std::counting_semaphore<kMaxSlots>& s;
      ~Release() { s.release(); }
    } release{slots_};

    const auto delays = backoff_schedule();
    int last_status = 0;
    std::string last_error;
    for (int attempt = 0; attempt <= opts_.retries; ++attempt) {
      if (attempt > 0) std::this_thread::sleep_for(delays[static_cast<std::size_t>(attempt - 1)]);
      httplib::Client cli(opts_.endpoint);
      cli.set_connection_timeout(opts_.timeout);
      cli.set_read_timeout(opts_.timeout);
      cli.set_write_timeout(opts_.timeout);
      auto res = std::string_view(method) == "GET" ? cli.Get(path) : cli.Post(path, body, "application/json");
      if (!res) {
        last_status = 0;
        last_error = httplib::to_string(res.error());
        continue;
      }
      last_status = res->status;
      if (res->status == 200) return wire::parse(res->body);
      if (res->status == 429 || res->status >= 500) {
        if (res->status == 501) throw CapabilityError("remote backend: " + error_message(res->body));
        last_error = error_message(res->body);
        continue;
      }
      throw wire::ProtocolError(error_code(res->body), error_message(res->body));
    }
    throw TransportError("remote backend " + opts_.endpoint + path + " failed after " +
                             std::to_string(opts_.retries + 1) + " attempts: " + last_error,
                         opts_.retries + 1, last_status);
  }

  static std::string error_code(const std::string& body) {
    try {
      return wire::json::parse(body).at("error").at("code").get<std::string>();
    } catch (...) {
      return "http_error";
    }
  }
  static std::string error_message(const std::string& body) {
    try {
      return wire::json::parse(body).at("error").at("message").get<std::string>();
    } catch (...) {
      return body.substr(0, 200);
    }
  }

  Options opts_;
  mutable std::counting_semaphore<kMaxSlots> slots_;
  mutable std::mutex descriptor_mutex_;
  mutable std::optional<BackendDescriptor> descriptor_;
};

}  // namespace vidvec
