// Regenerates the golden wire-protocol fixtures shared with the reference
// server: make_protocol_fixtures <out_dir>
//
// Each case is <name>.request.json / <name>.response.json (exact bytes, no
// trailing newline) plus an entry in index.json.

#include <filesystem>
#include <fstream>
#include <iostream>

#include "vidvec/backends/dispatch.hpp"
#include "vidvec/backends/mock.hpp"
#include "vidvec/backends/toy.hpp"

namespace {

using namespace vidvec;
namespace fs = std::filesystem;

struct Case {
  std::string name;
  const Backend* backend;
  std::string backend_name;
  std::string method;
  std::string path;
  std::string request;
};

std::string embed(const PairInput& in, TemplateId t, int layer) {
  return wire::canonical(wire::embed_request_json({in, t, layer}));
}

std::string score(const PairInput& q, const PairInput& c) {
  return wire::canonical(wire::score_request_json({q, c, TemplateId::YesNoRerank}));
}

void write_bytes(const fs::path& p, const std::string& bytes) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << bytes;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_protocol_fixtures <out_dir>\n";
    return 1;
  }
  const fs::path out = argv[1];
  fs::create_directories(out);

  const ToyBackend toy;
  const MockBackend mock;
  const MediaSpec dog{"dog", 2.0, 180};
  const MediaSpec beach{"beach", 1.5, 8};

  const std::vector<Case> cases = {
      {"toy_descriptor", &toy, "toy", "GET", "/v1/descriptor", ""},
      {"toy_embed_text", &toy, "toy", "POST", "/v1/embed", embed("a dog runs across the park", TemplateId::TextEOL, 2)},
      {"toy_embed_text_final", &toy, "toy", "POST", "/v1/embed", embed("waves on a beach", TemplateId::TextEOL, 3)},
      {"toy_embed_video", &toy, "toy", "POST", "/v1/embed", embed(dog, TemplateId::VideoEOL, 2)},
      {"toy_embed_video_prefixed", &toy, "toy", "POST", "/v1/embed",
       embed(beach, TemplateId::VideoEOLPrefixed, 1)},
      {"toy_score_match", &toy, "toy", "POST", "/v1/score", score(std::string("a dog runs"), dog)},
      {"toy_score_mismatch", &toy, "toy", "POST", "/v1/score", score(std::string("a dog runs"), beach)},
      {"mock_descriptor", &mock, "mock", "GET", "/v1/descriptor", ""},
      {"mock_embed_text", &mock, "mock", "POST", "/v1/embed", embed("hello world", TemplateId::TextEOL, 27)},
      {"mock_embed_video", &mock, "mock", "POST", "/v1/embed", embed(dog, TemplateId::VideoEOLPrefixed, 0)},
      {"mock_score", &mock, "mock", "POST", "/v1/score", score(dog, std::string("a dog runs"))},
      {"error_score_missing_template", &toy, "toy", "POST", "/v1/score",
       R"({"candidate":{"content":"x","modality":"text"},"query":{"content":"y","modality":"text"}})"},
      {"error_embed_bad_json", &toy, "toy", "POST", "/v1/embed", R"({"content":"x",)"},
      {"error_embed_missing_layer", &toy, "toy", "POST", "/v1/embed",
       R"({"content":"x","modality":"text","template_id":"text_eol"})"},
      {"error_embed_bad_modality", &toy, "toy", "POST", "/v1/embed",
       R"({"content":"x","layer":0,"modality":"audio","template_id":"text_eol"})"},
      {"error_embed_layer_out_of_range", &toy, "toy", "POST", "/v1/embed",
       R"({"content":"x","layer":4,"modality":"text","template_id":"text_eol"})"},
      {"error_embed_template_mismatch", &toy, "toy", "POST", "/v1/embed",
       R"({"content":"x","layer":0,"modality":"text","template_id":"video_eol"})"},
  };

  wire::json index = wire::json::array();
  for (const auto& c : cases) {
    const auto res = wire::dispatch(*c.backend, c.method, c.path, c.request);
    write_bytes(out / (c.name + ".request.json"), c.request);
    write_bytes(out / (c.name + ".response.json"), res.body);
    index.push_back({{"name", c.name},
                     {"backend", c.backend_name},
                     {"method", c.method},
                     {"path", c.path},
                     {"status", res.status}});
  }
  write_bytes(out / "index.json", index.dump(2) + "\n");
  std::cout << "wrote " << cases.size() << " fixtures to " << out.string() << "\n";
  return 0;
}
