#pragma once

#include <stdexcept>
#include <string>

#include <json.hpp>

namespace vidvec::detail {

// One bad JSONL record; the message is meant to follow "line N: ".
struct RecordError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline nlohmann::json parse_record(const std::string& line) {
  auto j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded()) throw RecordError("not valid JSON");
  if (!j.is_object()) throw RecordError("record is not a JSON object");
  return j;
}

template <class T>
T record_field(const nlohmann::json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) throw RecordError(std::string("missing field '") + key + "'");
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw RecordError(std::string("field '") + key + "' has the wrong type");
  }
}

}  // namespace vidvec::detail
