#pragma once

// Run configuration. File format is INI with one section per module:
//
//   [backend]      kind = mock|toy|remote, endpoint, seed, max_in_flight
//   [dataset]      manifest
//   [eval]         direction, layer, prompt_variant, fps, max_frames, threads
//   [calibration]  enabled, temperature_t2v, temperature_v2t, tune_manifest
//   [rerank]       enabled, k
//   [adapter]      path
//   [output]       dir
//
// Relative paths are resolved against the config file's directory.
// Command-line flags override file values.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <string>

#include <json.hpp>

#include "vidvec/backends/mock.hpp"
#include "vidvec/backends/prompt.hpp"
#include "vidvec/core/hash.hpp"
#include "vidvec/rerank/rerank.hpp"
#include "vidvec/retrieval/evaluate.hpp"

namespace vidvec {

enum class BackendKind { Mock, Toy, Remote };

inline std::string_view to_string(BackendKind k) {
  switch (k) {
    case BackendKind::Mock: return "mock";
    case BackendKind::Toy: return "toy";
    case BackendKind::Remote: return "remote";
  }
  return "mock";
}

inline BackendKind backend_kind_from_string(std::string_view s) {
  if (s == "mock") return BackendKind::Mock;
  if (s == "toy") return BackendKind::Toy;
  if (s == "remote") return BackendKind::Remote;
  throw ConfigError("unknown backend kind '" + std::string(s) + "' (expected mock, toy or remote)");
}

struct BackendConfig {
  BackendKind kind = BackendKind::Mock;
  std::string endpoint;
  std::optional<std::uint64_t> seed;  // backend default when unset
  unsigned max_in_flight = 8;
};

struct RunConfig {
  BackendConfig backend;
  std::filesystem::path manifest;
  Direction direction = Direction::T2V;
  int layer = 24;
  TemplateId prompt_variant = TemplateId::VideoEOLPrefixed;
  double fps = 2.0;
  int max_frames = 180;
  unsigned threads = 1;
  CalibrationConfig calibration;
  std::filesystem::path tune_manifest;  // optional validation manifest for temperature search
  std::optional<RerankConfig> rerank;
  std::filesystem::path adapter;        // optional
  std::filesystem::path output_dir = "vidvec_out";
};

namespace detail {

inline std::string file_digest(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) return "missing";
  const std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

template <class T>
T parse_value(const std::string& section, const std::string& key, const std::string& raw) {
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (raw == "true" || raw == "1" || raw == "yes" || raw == "on") return true;
      if (raw == "false" || raw == "0" || raw == "no" || raw == "off") return false;
      throw std::invalid_argument("not a boolean");
    } else if constexpr (std::is_same_v<T, double>) {
      std::size_t used = 0;
      const double v = std::stod(raw, &used);
      if (used != raw.size()) throw std::invalid_argument("trailing characters");
      return v;
    } else {
      std::size_t used = 0;
      const long long v = std::stoll(raw, &used);
      if (used != raw.size()) throw std::invalid_argument("trailing characters");
      return static_cast<T>(v);
    }
  } catch (const std::exception&) {
    throw ConfigError("invalid value '" + raw + "' for " + section + "." + key);
  }
}

}  // namespace detail

// Reads an INI config file; unknown sections or keys are rejected.
inline RunConfig load_config(const std::filesystem::path& path) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(path.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("cannot read config: ") + e.what());
  }
  const auto base = path.parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() || p.empty() ? fp : base / fp;
  };

  RunConfig c;
  for (const auto& [section, entries] : tree) {
    if (entries.empty() && !entries.data().empty())
      throw ConfigError("config key '" + section + "' outside a section");
    for (const auto& [key, node] : entries) {
      const std::string raw = node.get_value<std::string>();
      const std::string name = section + "." + key;
      if (name == "backend.kind") c.backend.kind = backend_kind_from_string(raw);
      else if (name == "backend.endpoint") c.backend.endpoint = raw;
      else if (name == "backend.seed") c.backend.seed = detail::parse_value<std::uint64_t>(section, key, raw);
      else if (name == "backend.max_in_flight") c.backend.max_in_flight = detail::parse_value<unsigned>(section, key, raw);
      else if (name == "dataset.manifest") c.manifest = resolve(raw);
      else if (name == "eval.direction") {
        try {
          c.direction = direction_from_string(raw);
        } catch (const ContractError& e) {
          throw ConfigError(e.what());
        }
      } else if (name == "eval.layer") c.layer = detail::parse_value<int>(section, key, raw);
      else if (name == "eval.prompt_variant") {
        try {
          c.prompt_variant = template_from_string(raw);
        } catch (const ContractError& e) {
          throw ConfigError(e.what());
        }
      } else if (name == "eval.fps") c.fps = detail::parse_value<double>(section, key, raw);
      else if (name == "eval.max_frames") c.max_frames = detail::parse_value<int>(section, key, raw);
      else if (name == "eval.threads") c.threads = detail::parse_value<unsigned>(section, key, raw);
      else if (name == "calibration.enabled") c.calibration.enabled = detail::parse_value<bool>(section, key, raw);
      else if (name == "calibration.temperature_t2v") c.calibration.temperature_t2v = detail::parse_value<double>(section, key, raw);
      else if (name == "calibration.temperature_v2t") c.calibration.temperature_v2t = detail::parse_value<double>(section, key, raw);
      else if (name == "calibration.tune_manifest") c.tune_manifest = resolve(raw);
      else if (name == "rerank.enabled") {
        if (detail::parse_value<bool>(section, key, raw)) {
          if (!c.rerank) c.rerank = RerankConfig::zero_shot();
        } else {
          c.rerank.reset();
        }
      } else if (name == "rerank.k") {
        if (!c.rerank) c.rerank = RerankConfig::zero_shot();
        c.rerank->k = detail::parse_value<int>(section, key, raw);
      } else if (name == "adapter.path") c.adapter = resolve(raw);
      else if (name == "output.dir") c.output_dir = resolve(raw);
      else throw ConfigError("unknown config key '" + name + "'");
    }
  }
  return c;
}

// Checks value ranges and that referenced files exist.
inline void validate(const RunConfig& c) {
  if (c.manifest.empty()) throw ConfigError("no dataset manifest configured");
  if (!std::filesystem::exists(c.manifest)) throw ConfigError("manifest '" + c.manifest.string() + "' does not exist");
  if (!c.adapter.empty() && !std::filesystem::exists(c.adapter))
    throw ConfigError("adapter '" + c.adapter.string() + "' does not exist");
  if (!c.tune_manifest.empty() && !std::filesystem::exists(c.tune_manifest))
    throw ConfigError("tune manifest '" + c.tune_manifest.string() + "' does not exist");
  if (c.backend.kind == BackendKind::Remote && c.backend.endpoint.empty())
    throw ConfigError("remote backend needs backend.endpoint");
  if (c.backend.max_in_flight < 1) throw ConfigError("backend.max_in_flight must be >= 1");
  if (c.layer < 0) throw ConfigError("eval.layer must be >= 0");
  if (!is_video_template(c.prompt_variant)) throw ConfigError("eval.prompt_variant must be a video template");
  if (!(c.fps > 0.0) || c.max_frames < 1) throw ConfigError("eval.fps and eval.max_frames must be positive");
  if (c.threads < 1) throw ConfigError("eval.threads must be >= 1");
  if (c.calibration.enabled && c.tune_manifest.empty() &&
      !(c.calibration.temperature_t2v > 0.0 && c.calibration.temperature_v2t > 0.0))
    throw ConfigError("calibration temperatures must be positive");
  if (c.rerank && c.rerank->k < 1) throw ConfigError("rerank.k must be >= 1");
}

// Canonical description of every setting that affects results. Files are
// represented by content digest so edits to them change the hash.
inline nlohmann::json config_to_json(const RunConfig& c) {
  nlohmann::json j;
  j["backend"] = {{"kind", std::string(to_string(c.backend.kind))},
                  {"endpoint", c.backend.endpoint},
                  {"seed", c.backend.seed ? std::to_string(*c.backend.seed) : std::string("default")}};
  j["dataset"] = {{"manifest", c.manifest.filename().string()}, {"digest", detail::file_digest(c.manifest)}};
  j["eval"] = {{"direction", std::string(to_string(c.direction))},
               {"layer", c.layer},
               {"prompt_variant", std::string(to_string(c.prompt_variant))},
               {"fps", format_g9(c.fps)},
               {"max_frames", c.max_frames}};
  j["calibration"] = {{"enabled", c.calibration.enabled},
                      {"temperature_t2v", format_g9(c.calibration.temperature_t2v)},
                      {"temperature_v2t", format_g9(c.calibration.temperature_v2t)},
                      {"tune_manifest_digest",
                       c.tune_manifest.empty() ? std::string("none") : detail::file_digest(c.tune_manifest)}};
  j["rerank"] = {{"enabled", c.rerank.has_value()}, {"k", c.rerank ? c.rerank->k : 0}};
  j["adapter"] = {{"digest", c.adapter.empty() ? std::string("none") : detail::file_digest(c.adapter)}};
  return j;
}

inline std::string config_hash(const RunConfig& c) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(config_to_json(c).dump())));
  return buf;
}

}  // namespace vidvec
