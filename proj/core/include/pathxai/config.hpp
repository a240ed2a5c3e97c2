#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>

namespace pathxai {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat `key = value` text with optional `[section]` headers. Keys inside a
/// section are stored as "section.key". `#` and `;` start comment lines.
struct KeyValueFile {
  std::map<std::string, std::string> entries;

  [[nodiscard]] bool contains(const std::string& key) const { return entries.contains(key); }
  [[nodiscard]] std::optional<std::string> get(const std::string& key) const;
  void set(const std::string& key, std::string value) { entries[key] = std::move(value); }
};

KeyValueFile parse_key_values(std::istream& in, const std::string& source = "<input>");
KeyValueFile load_key_values(const std::filesystem::path& path);

/// Inverse of parse_key_values: top-level keys first, then one block per section.
std::string format_key_values(const KeyValueFile& file);

}  // namespace pathxai
