#pragma once

// Adapter file ("VADP"), little-endian:
//   "VADP" | u16 version | u32 dim | u32 rank | f32 alpha
//   rank x dim f32 (down, row-major) | dim x rank f32 (up, row-major)
//   u32 CRC32 over every byte between the magic and the checksum.

#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "vidvec/adapter/adapter.hpp"
#include "vidvec/core/cache.hpp"

namespace vidvec {

inline constexpr std::array<char, 4> kAdapterMagic{'V', 'A', 'D', 'P'};
inline constexpr std::uint16_t kAdapterVersion = 1;

inline std::vector<std::uint8_t> encode_adapter(const AdapterParams& p) {
  validate(p);
  detail::ByteWriter w;
  w.put_bytes(std::string_view(kAdapterMagic.data(), kAdapterMagic.size()));
  w.put(kAdapterVersion);
  w.put(static_cast<std::uint32_t>(p.dim()));
  w.put(static_cast<std::uint32_t>(p.rank()));
  w.put_f32(static_cast<float>(p.alpha));
  for (Eigen::Index i = 0; i < p.down.rows(); ++i)
    for (Eigen::Index j = 0; j < p.down.cols(); ++j) w.put_f32(static_cast<float>(p.down(i, j)));
  for (Eigen::Index i = 0; i < p.up.rows(); ++i)
    for (Eigen::Index j = 0; j < p.up.cols(); ++j) w.put_f32(static_cast<float>(p.up(i, j)));
  auto& bytes = w.bytes();
  w.put(detail::crc32_of(std::span(bytes).subspan(kAdapterMagic.size())));
  return std::move(bytes);
}

inline AdapterParams decode_adapter(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kAdapterMagic.size() ||
      std::memcmp(bytes.data(), kAdapterMagic.data(), kAdapterMagic.size()) != 0)
    throw CacheError(CacheErrorKind::BadMagic, "not an adapter file (bad magic)");
  detail::ByteReader r(bytes.subspan(kAdapterMagic.size()));
  const auto version = r.get<std::uint16_t>();
  if (version != kAdapterVersion)
    throw CacheError(CacheErrorKind::VersionMismatch, "adapter file version " + std::to_string(version));
  const auto dim = r.get<std::uint32_t>();
  const auto rank = r.get<std::uint32_t>();
  if (dim == 0 || rank == 0 || rank > dim || dim > (1u << 20))
    throw CacheError(CacheErrorKind::Malformed, "adapter file has an invalid shape");
  if (r.remaining() != 4ULL + 8ULL * dim * rank + 4ULL)
    throw CacheError(CacheErrorKind::Truncated, "adapter file is truncated or has trailing bytes");
  AdapterParams p;
  p.alpha = r.get_f32();
  p.down.resize(rank, dim);
  p.up.resize(dim, rank);
  for (Eigen::Index i = 0; i < p.down.rows(); ++i)
    for (Eigen::Index j = 0; j < p.down.cols(); ++j) p.down(i, j) = r.get_f32();
  for (Eigen::Index i = 0; i < p.up.rows(); ++i)
    for (Eigen::Index j = 0; j < p.up.cols(); ++j) p.up(i, j) = r.get_f32();
  const std::size_t payload_end = bytes.size() - r.remaining();
  const auto stored = r.get<std::uint32_t>();
  if (stored != detail::crc32_of(bytes.subspan(kAdapterMagic.size(), payload_end - kAdapterMagic.size())))
    throw CacheError(CacheErrorKind::Checksum, "adapter file checksum mismatch");
  validate(p);
  return p;
}

inline void save_adapter(const std::filesystem::path& path, const AdapterParams& p) {
  const auto bytes = encode_adapter(p);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw CacheError(CacheErrorKind::Io, "cannot open '" + path.string() + "' for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

inline AdapterParams load_adapter(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CacheError(CacheErrorKind::Io, "cannot open '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_adapter(bytes);
}

// Content hash of an adapter for cache keys ("none" when absent).
inline std::string adapter_hash(const AdapterParams* p) {
  if (!p) return "none";
  const auto bytes = encode_adapter(*p);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(std::string_view(
                    reinterpret_cast<const char*>(bytes.data()), bytes.size()))));
  return buf;
}

}  // namespace vidvec
