#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "vidvec/core/errors.hpp"
#include "vidvec/core/jsonl.hpp"
#include "vidvec/core/types.hpp"

namespace vidvec {

struct IngestOptions {
  bool paragraph = false;  // join all captions of an item into one paragraph
  Split split = Split::Test;
};

// Paragraph joining: captions trimmed, one trailing '.' dropped, joined with ". ".
inline std::string join_paragraph(const std::vector<std::string>& captions) {
  std::string out;
  for (auto c : captions) {
    const auto b = c.find_first_not_of(" \t\r\n");
    const auto e = c.find_last_not_of(" \t\r\n");
    c = b == std::string::npos ? "" : c.substr(b, e - b + 1);
    if (!c.empty() && c.back() == '.') c.pop_back();
    if (c.empty()) continue;
    if (!out.empty()) out += ". ";
    out += c;
  }
  return out;
}

// Parses raw JSONL records {"item_id","media_ref","captions":[...]} into a
// validated manifest. Every offending record is reported, not just the first.
inline DatasetManifest ingest(std::istream& in, const IngestOptions& opts = {}) {
  DatasetManifest m;
  m.split = opts.split;
  std::vector<std::string> problems;
  std::set<std::string> ids;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "line " + std::to_string(lineno);
    ManifestItem item;
    try {
      const auto j = detail::parse_record(line);
      item.item_id = detail::record_field<std::string>(j, "item_id");
      item.media_ref = j.contains("media_ref") ? detail::record_field<std::string>(j, "media_ref") : item.item_id;
      item.captions = detail::record_field<std::vector<std::string>>(j, "captions");
    } catch (const detail::RecordError& e) {
      problems.push_back(where + ": " + e.what());
      continue;
    }
    std::erase_if(item.captions, [](const std::string& c) {
      return c.find_first_not_of(" \t\r\n") == std::string::npos;
    });
    if (opts.paragraph && !item.captions.empty()) item.captions = {join_paragraph(item.captions)};
    if (item.item_id.empty()) {
      problems.push_back(where + ": empty item_id");
      continue;
    }
    if (!ids.insert(item.item_id).second) {
      problems.push_back(where + ": duplicate item_id '" + item.item_id + "'");
      continue;
    }
    if (item.captions.empty()) {
      problems.push_back(where + ": item '" + item.item_id + "' has no captions");
      continue;
    }
    m.items.push_back(std::move(item));
  }
  if (!problems.empty()) throw IngestError(std::move(problems));
  return m;
}

inline DatasetManifest ingest_file(const std::filesystem::path& path, const IngestOptions& opts = {}) {
  std::ifstream f(path);
  if (!f) throw IngestError({"cannot open '" + path.string() + "'"});
  return ingest(f, opts);
}

inline nlohmann::json manifest_to_json(const DatasetManifest& m) {
  nlohmann::json items = nlohmann::json::array();
  for (const auto& it : m.items)
    items.push_back({{"item_id", it.item_id}, {"media_ref", it.media_ref}, {"captions", it.captions}});
  return {{"split", std::string(to_string(m.split))}, {"items", std::move(items)}};
}

inline DatasetManifest manifest_from_json(const nlohmann::json& j) {
  DatasetManifest m;
  try {
    m.split = split_from_string(j.at("split").get<std::string>());
    for (const auto& it : j.at("items"))
      m.items.push_back({it.at("item_id").get<std::string>(), it.at("media_ref").get<std::string>(),
                         it.at("captions").get<std::vector<std::string>>()});
  } catch (const nlohmann::json::exception& e) {
    throw IngestError({std::string("malformed manifest: ") + e.what()});
  }
  validate(m);
  return m;
}

inline void write_manifest(const std::filesystem::path& path, const DatasetManifest& m) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw Error("cannot write manifest '" + path.string() + "'");
  f << manifest_to_json(m).dump(2) << '\n';
}

inline DatasetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IngestError({"cannot open manifest '" + path.string() + "'"});
  try {
    return manifest_from_json(nlohmann::json::parse(f));
  } catch (const nlohmann::json::parse_error& e) {
    throw IngestError({"manifest '" + path.string() + "' is not valid JSON: " + e.what()});
  }
}

}  // namespace vidvec
