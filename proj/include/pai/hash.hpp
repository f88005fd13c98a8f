#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace pai {

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);
std::string sha256_hex(std::span<const uint8_t> data);
std::string sha256_file(const std::filesystem::path& path);

std::string base64_encode(std::string_view data);
/// Throws ErrorKind::Parse on characters outside the standard alphabet.
std::string base64_decode(std::string_view text);

}  // namespace pai
