#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace vidvec {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A precondition of an operation was violated by the caller (or by a broken backend).
class ContractError : public Error {
 public:
  using Error::Error;
};

// Backend lacks a requested capability (layer selection, pair scoring).
class CapabilityError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Remote backend could not be reached after exhausting retries.
class TransportError : public Error {
 public:
  TransportError(const std::string& what, int attempts, int last_status)
      : Error(what), attempts_(attempts), last_status_(last_status) {}

  int attempts() const noexcept { return attempts_; }
  // HTTP status of the last attempt, 0 when no response was received.
  int last_status() const noexcept { return last_status_; }

 private:
  int attempts_;
  int last_status_;
};

enum class CacheErrorKind { Io, BadMagic, VersionMismatch, Truncated, Checksum, Malformed };

class CacheError : public Error {
 public:
  CacheError(CacheErrorKind kind, const std::string& what) : Error(what), kind_(kind) {}
  CacheErrorKind kind() const noexcept { return kind_; }

 private:
  CacheErrorKind kind_;
};

// Embeddings required for evaluation were not supplied.
class MissingEmbeddingsError : public Error {
 public:
  explicit MissingEmbeddingsError(std::vector<std::string> ids)
      : Error(format(ids)), ids_(std::move(ids)) {}
  const std::vector<std::string>& ids() const noexcept { return ids_; }

 private:
  static std::string format(const std::vector<std::string>& ids) {
    std::string msg = "missing embeddings for " + std::to_string(ids.size()) + " id(s):";
    std::size_t shown = 0;
    for (const auto& id : ids) {
      if (++shown > 20) {
        msg += " ...";
        break;
      }
      msg += " " + id;
    }
    return msg;
  }
  std::vector<std::string> ids_;
};

class IngestError : public Error {
 public:
  explicit IngestError(std::vector<std::string> problems)
      : Error(format(problems)), problems_(std::move(problems)) {}
  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  static std::string format(const std::vector<std::string>& problems) {
    std::string msg = "ingestion failed:";
    for (const auto& p : problems) msg += "\n  " + p;
    return msg;
  }
  std::vector<std::string> problems_;
};

#define VIDVEC_REQUIRE(cond, msg)                  \
  do {                                             \
    if (!(cond)) throw ::vidvec::ContractError(msg); \
  } while (false)

}  // namespace vidvec
