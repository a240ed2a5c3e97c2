#pragma once

#include <filesystem>
#include <span>
#include <string>

namespace pathxai {

/// Lower-case hex SHA-256 of a byte buffer or a file's contents.
std::string sha256_hex(std::span<const unsigned char> bytes);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace pathxai
