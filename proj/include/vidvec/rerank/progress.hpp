#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <utility>

#include <json.hpp>

#include "vidvec/backends/wire.hpp"
#include "vidvec/core/errors.hpp"

namespace vidvec {

// Append-only JSONL checkpoint of scorer results:
//   {"candidate_id":"...","p_yes":0.5,"query_id":"..."}
// A trailing partial line (interrupted write) is ignored on load.
class ProgressLog {
 public:
  ProgressLog() = default;
  explicit ProgressLog(std::filesystem::path path) : path_(std::move(path)) { load(); }

  std::optional<double> find(const std::string& query_id, const std::string& candidate_id) const {
    std::lock_guard lock(mutex_);
    auto it = scores_.find({query_id, candidate_id});
    if (it == scores_.end()) return std::nullopt;
    return it->second;
  }

  void record(const std::string& query_id, const std::string& candidate_id, double p_yes) {
    std::lock_guard lock(mutex_);
    if (!scores_.emplace(std::pair{query_id, candidate_id}, p_yes).second) return;
    if (path_.empty()) return;
    std::ofstream f(path_, std::ios::app);
    if (!f) throw Error("cannot append to progress file '" + path_.string() + "'");
    f << wire::canonical({{"query_id", query_id}, {"candidate_id", candidate_id}, {"p_yes", p_yes}}) << '\n';
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return scores_.size();
  }

 private:
  void load() {
    std::ifstream f(path_);
    if (!f) return;
    std::string line;
    while (std::getline(f, line)) {
      if (line.empty()) continue;
      try {
        const auto j = nlohmann::json::parse(line);
        scores_[{j.at("query_id").get<std::string>(), j.at("candidate_id").get<std::string>()}] =
            j.at("p_yes").get<double>();
      } catch (const nlohmann::json::exception&) {
        if (f.peek() != std::char_traits<char>::eof())
          throw Error("corrupt progress file '" + path_.string() + "'");
      }
    }
  }

  std::filesystem::path path_;
  mutable std::mutex mutex_;
  std::map<std::pair<std::string, std::string>, double> scores_;
};

}  // namespace vidvec
