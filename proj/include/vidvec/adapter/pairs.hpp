#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "vidvec/core/errors.hpp"
#include "vidvec/core/jsonl.hpp"

namespace vidvec {

// Dense caption -> brief summary training pair.
struct TextPair {
  std::string dense;
  std::string summary;
  std::string pair_id;
};

inline std::size_t whitespace_tokens(const std::string& s) {
  std::istringstream in(s);
  std::size_t n = 0;
  std::string w;
  while (in >> w) ++n;
  return n;
}

// Reads a JSONL pairs file of {"pair_id","dense","summary"} records.
inline std::vector<TextPair> read_pairs(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IngestError({"cannot open pairs file '" + path.string() + "'"});
  std::vector<TextPair> out;
  std::vector<std::string> problems;
  std::set<std::string> ids;
  std::string line;
  for (std::size_t lineno = 1; std::getline(f, line); ++lineno) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = detail::parse_record(line);
      TextPair p{detail::record_field<std::string>(j, "dense"), detail::record_field<std::string>(j, "summary"),
                 detail::record_field<std::string>(j, "pair_id")};
      if (p.dense.empty() || p.summary.empty())
        problems.push_back("line " + std::to_string(lineno) + ": empty dense or summary");
      else if (!ids.insert(p.pair_id).second)
        problems.push_back("line " + std::to_string(lineno) + ": duplicate pair_id '" + p.pair_id + "'");
      else
        out.push_back(std::move(p));
    } catch (const detail::RecordError& e) {
      problems.push_back("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!problems.empty()) throw IngestError(std::move(problems));
  return out;
}

inline void write_pairs(const std::filesystem::path& path, const std::vector<TextPair>& pairs) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw Error("cannot write pairs file '" + path.string() + "'");
  for (const auto& p : pairs)
    f << nlohmann::json{{"pair_id", p.pair_id}, {"dense", p.dense}, {"summary", p.summary}}.dump() << '\n';
}

}  // namespace vidvec
