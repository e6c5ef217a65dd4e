#pragma once

#include <cstdio>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "vidvec/retrieval/evaluate.hpp"

namespace vidvec {

inline nlohmann::json report_to_json(const EvalReport& r) {
  nlohmann::json recall = nlohmann::json::object();
  for (const auto& [k, v] : r.recall_at) recall["R@" + std::to_string(k)] = v;
  return {{"direction", std::string(to_string(r.direction))},
          {"recall", recall},
          {"n_queries", r.n_queries},
          {"calibrated", r.calibrated}};
}

inline EvalReport report_from_json(const nlohmann::json& j) {
  EvalReport r;
  r.direction = direction_from_string(j.at("direction").get<std::string>());
  for (const auto& [key, v] : j.at("recall").items()) {
    VIDVEC_REQUIRE(key.rfind("R@", 0) == 0, "bad recall key '" + key + "'");
    r.recall_at[std::stoi(key.substr(2))] = v.get<double>();
  }
  r.n_queries = j.at("n_queries").get<std::size_t>();
  r.calibrated = j.at("calibrated").get<bool>();
  return r;
}

// Aligned text table, recall in percent with one decimal:
//
//   label        dir  cal  queries   R@1   R@5  R@10
inline std::string format_table(std::span<const std::pair<std::string, EvalReport>> rows) {
  std::size_t label_w = 5;
  for (const auto& [label, _] : rows) label_w = std::max(label_w, label.size());
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-*s  %-3s  %-3s  %7s  %5s  %5s  %5s\n", static_cast<int>(label_w), "label",
                "dir", "cal", "queries", "R@1", "R@5", "R@10");
  out += buf;
  for (const auto& [label, r] : rows) {
    auto pct = [&](int k) { return r.recall_at.contains(k) ? 100.0 * r.recall_at.at(k) : 0.0; };
    std::snprintf(buf, sizeof buf, "%-*s  %-3s  %-3s  %7zu  %5.1f  %5.1f  %5.1f\n", static_cast<int>(label_w),
                  label.c_str(), std::string(to_string(r.direction)).c_str(), r.calibrated ? "yes" : "no",
                  r.n_queries, pct(1), pct(5), pct(10));
    out += buf;
  }
  return out;
}

// "layer,r1,r5,r10" rows for plotting layer curves.
inline std::string format_layer_csv(std::span<const std::pair<int, EvalReport>> rows) {
  std::string out = "layer,r1,r5,r10\n";
  char buf[128];
  for (const auto& [layer, r] : rows) {
    std::snprintf(buf, sizeof buf, "%d,%.6f,%.6f,%.6f\n", layer, r.r(1), r.r(5), r.r(10));
    out += buf;
  }
  return out;
}

}  // namespace vidvec
