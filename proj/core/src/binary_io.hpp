// Copyright 2026 The crashsurrogate Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <zlib.h>

#include "crash/errors.hpp"

// Little-endian flat array files with CRC32 checks.
namespace crash::detail {

static_assert(std::endian::native == std::endian::little, "little-endian host required");

inline std::uint32_t crc32_bytes(const std::vector<char>& bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  std::size_t off = 0;
  while (off < bytes.size()) {
    const std::size_t chunk = std::min<std::size_t>(bytes.size() - off, 1u << 30);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + off), uInt(chunk));
    off += chunk;
  }
  return std::uint32_t(crc);
}

template <class T>
std::vector<char> to_bytes(const std::vector<T>& values) {
  std::vector<char> out(values.size() * sizeof(T));
  if (!out.empty()) std::memcpy(out.data(), values.data(), out.size());
  return out;
}

template <class T>
std::vector<T> from_bytes(const std::vector<char>& bytes) {
  std::vector<T> out(bytes.size() / sizeof(T));
  if (!out.empty()) std::memcpy(out.data(), bytes.data(), out.size() * sizeof(T));
  return out;
}

inline void write_file(const std::filesystem::path& path, const std::vector<char>& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot open " + path.string() + " for writing");
  f.write(bytes.data(), std::streamsize(bytes.size()));
  if (!f) throw DataError("write failed: " + path.string());
}

inline std::vector<char> read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return bytes;
}

// Reads a file and verifies its size and CRC32; the error names the file.
inline std::vector<char> read_checked(const std::filesystem::path& path, std::size_t expected_bytes,
                                      std::uint32_t expected_crc) {
  std::vector<char> bytes = read_file(path);
  if (bytes.size() != expected_bytes || crc32_bytes(bytes) != expected_crc) {
    throw DataError("checksum mismatch in " + path.filename().string() + " (" + std::to_string(bytes.size()) +
                    " bytes, expected " + std::to_string(expected_bytes) + ")");
  }
  return bytes;
}

}  // namespace crash::detail
