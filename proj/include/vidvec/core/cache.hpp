#pragma once

// Binary embedding cache ("VVEC").
//
// Layout, all integers and floats little-endian:
//   "VVEC" | u16 version | u32 dim | i32 layer | u8 modality | u64 count
//   count x { u16 id_len | id bytes (UTF-8) | dim x f32 }
//   u32 CRC32 over every byte between the magic and the checksum.

#include <zlib.h>

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "vidvec/core/errors.hpp"
#include "vidvec/core/types.hpp"

namespace vidvec {

inline constexpr std::array<char, 4> kCacheMagic{'V', 'V', 'E', 'C'};
inline constexpr std::uint16_t kCacheVersion = 1;

struct CacheHeader {
  std::uint16_t version = kCacheVersion;
  std::uint32_t dim = 0;
  std::int32_t layer = 0;
  Modality modality = Modality::Text;
  std::uint64_t count = 0;
};

struct CacheContents {
  CacheHeader header;
  std::vector<Embedding> embeddings;
};

namespace detail {

class ByteWriter {
 public:
  template <class T>
  void put(T v) {
    using U = std::make_unsigned_t<T>;
    auto u = static_cast<U>(v);
    for (std::size_t i = 0; i < sizeof(T); ++i) bytes_.push_back(static_cast<std::uint8_t>(u >> (8 * i)));
  }
  void put_f32(float f) { put(std::bit_cast<std::uint32_t>(f)); }
  void put_bytes(std::string_view s) { bytes_.insert(bytes_.end(), s.begin(), s.end()); }
  std::vector<std::uint8_t>& bytes() noexcept { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

  template <class T>
  T get() {
    need(sizeof(T));
    std::make_unsigned_t<T> u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      u |= static_cast<std::make_unsigned_t<T>>(data_[pos_ + i]) << (8 * i);
    pos_ += sizeof(T);
    return static_cast<T>(u);
  }
  float get_f32() { return std::bit_cast<float>(get<std::uint32_t>()); }
  std::string get_string(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const noexcept { return data_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (remaining() < n) throw CacheError(CacheErrorKind::Truncated, "embedding cache is truncated");
  }
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

inline std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks for very large caches.
  std::size_t off = 0;
  while (off < bytes.size()) {
    const auto n = static_cast<uInt>(std::min<std::size_t>(bytes.size() - off, 1u << 30));
    crc = ::crc32(crc, bytes.data() + off, n);
    off += n;
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace detail

// Serializes embeddings to the cache byte layout. All embeddings must share
// dim, layer and modality. An empty list writes the given header defaults.
inline std::vector<std::uint8_t> encode_cache(std::span<const Embedding> embeddings,
                                              CacheHeader header = {}) {
  if (!embeddings.empty()) {
    const auto& first = embeddings.front();
    header.dim = static_cast<std::uint32_t>(first.dim());
    header.layer = first.layer;
    header.modality = first.modality;
  }
  header.version = kCacheVersion;
  header.count = embeddings.size();
  for (const auto& e : embeddings) {
    VIDVEC_REQUIRE(e.dim() == header.dim && e.layer == header.layer && e.modality == header.modality,
                   "cache entries must share dim, layer and modality");
    VIDVEC_REQUIRE(e.item_id.size() <= 0xffff, "cache item id longer than 65535 bytes");
  }

  detail::ByteWriter w;
  w.put_bytes(std::string_view(kCacheMagic.data(), kCacheMagic.size()));
  w.put(header.version);
  w.put(header.dim);
  w.put(header.layer);
  w.put(static_cast<std::uint8_t>(header.modality));
  w.put(header.count);
  for (const auto& e : embeddings) {
    w.put(static_cast<std::uint16_t>(e.item_id.size()));
    w.put_bytes(e.item_id);
    for (float v : e.values) w.put_f32(v);
  }
  auto& bytes = w.bytes();
  const auto crc = detail::crc32_of(std::span(bytes).subspan(kCacheMagic.size()));
  w.put(crc);
  return std::move(bytes);
}

inline CacheContents decode_cache(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kCacheMagic.size() ||
      std::memcmp(bytes.data(), kCacheMagic.data(), kCacheMagic.size()) != 0)
    throw CacheError(CacheErrorKind::BadMagic, "not an embedding cache (bad magic)");

  detail::ByteReader r(bytes.subspan(kCacheMagic.size()));
  CacheContents out;
  auto& h = out.header;
  h.version = r.get<std::uint16_t>();
  if (h.version != kCacheVersion)
    throw CacheError(CacheErrorKind::VersionMismatch,
                     "embedding cache version " + std::to_string(h.version) + ", expected " +
                         std::to_string(kCacheVersion));
  h.dim = r.get<std::uint32_t>();
  h.layer = r.get<std::int32_t>();
  const auto modality = r.get<std::uint8_t>();
  h.count = r.get<std::uint64_t>();
  if (modality > 1) throw CacheError(CacheErrorKind::Malformed, "embedding cache has unknown modality");
  h.modality = static_cast<Modality>(modality);

  // Each record is at least 2 + 4*dim bytes; reject absurd counts before allocating.
  const std::uint64_t min_record = 2 + 4ULL * h.dim;
  if (h.count > 0 && (r.remaining() < 4 || (r.remaining() - 4) / min_record < h.count))
    throw CacheError(CacheErrorKind::Truncated, "embedding cache is truncated");

  out.embeddings.reserve(static_cast<std::size_t>(h.count));
  for (std::uint64_t i = 0; i < h.count; ++i) {
    Embedding e;
    e.item_id = r.get_string(r.get<std::uint16_t>());
    e.values.resize(h.dim);
    for (auto& v : e.values) v = r.get_f32();
    e.layer = h.layer;
    e.modality = h.modality;
    out.embeddings.push_back(std::move(e));
  }
  const std::size_t payload_end = bytes.size() - r.remaining();
  const auto stored = r.get<std::uint32_t>();
  if (r.remaining() != 0)
    throw CacheError(CacheErrorKind::Malformed, "embedding cache has trailing bytes");
  const auto actual =
      detail::crc32_of(bytes.subspan(kCacheMagic.size(), payload_end - kCacheMagic.size()));
  if (stored != actual) throw CacheError(CacheErrorKind::Checksum, "embedding cache checksum mismatch");
  return out;
}

inline void cache_write(const std::filesystem::path& path, std::span<const Embedding> embeddings,
                        CacheHeader header = {}) {
  const auto bytes = encode_cache(embeddings, header);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw CacheError(CacheErrorKind::Io, "cannot open '" + path.string() + "' for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw CacheError(CacheErrorKind::Io, "write failed for '" + path.string() + "'");
}

inline CacheContents cache_read_contents(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CacheError(CacheErrorKind::Io, "cannot open '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_cache(bytes);
}

inline std::vector<Embedding> cache_read(const std::filesystem::path& path) {
  return cache_read_contents(path).embeddings;
}

}  // namespace vidvec
