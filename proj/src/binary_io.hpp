#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace pai::detail {

// Little-endian helpers; the build targets little-endian hosts only.
static_assert(std::endian::native == std::endian::little);

template <typename T>
T read_le(std::span<const uint8_t> buf, std::size_t offset) {
  T v;
  std::memcpy(&v, buf.data() + offset, sizeof(T));
  return v;
}

template <typename T>
void put_le(std::vector<uint8_t>& buf, T v) {
  const auto* p = reinterpret_cast<const uint8_t*>(&v);
  buf.insert(buf.end(), p, p + sizeof(T));
}

template <typename T>
void write_le_at(std::vector<uint8_t>& buf, std::size_t offset, T v) {
  std::memcpy(buf.data() + offset, &v, sizeof(T));
}

inline void put_fixed_string(std::vector<uint8_t>& buf, const std::string& s, std::size_t width) {
  for (std::size_t i = 0; i < width; ++i) {
    buf.push_back(i < s.size() ? static_cast<uint8_t>(s[i]) : 0);
  }
}

std::vector<uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const uint8_t> bytes);
std::string read_file_text(const std::filesystem::path& path);
void write_file_text(const std::filesystem::path& path, const std::string& text);

}  // namespace pai::detail
