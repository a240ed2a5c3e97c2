#include "pathxai/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <vector>

namespace pathxai {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

bool valid_name(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.' || c == '/')) return false;
  }
  return true;
}

}  // namespace

std::optional<std::string> KeyValueFile::get(const std::string& key) const {
  const auto it = entries.find(key);
  if (it == entries.end()) return std::nullopt;
  return it->second;
}

KeyValueFile parse_key_values(std::istream& in, const std::string& source) {
  KeyValueFile out;
  std::string section;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    const std::string where = source + ":" + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!valid_name(section)) throw ConfigError(where + "invalid section name '" + section + "'");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    if (!valid_name(key)) throw ConfigError(where + "invalid key '" + key + "'");
    const std::string full = section.empty() ? key : section + "." + key;
    if (out.entries.contains(full)) throw ConfigError(where + "duplicate key '" + full + "'");
    out.entries[full] = trim(line.substr(eq + 1));
  }
  return out;
}

KeyValueFile load_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path.string() + "'");
  return parse_key_values(in, path.string());
}

std::string format_key_values(const KeyValueFile& file) {
  std::ostringstream out;
  std::map<std::string, std::vector<std::pair<std::string, std::string>>> sections;
  for (const auto& [k, v] : file.entries) {
    const auto dot = k.find('.');
    if (dot == std::string::npos) {
      out << k << " = " << v << '\n';
    } else {
      sections[k.substr(0, dot)].emplace_back(k.substr(dot + 1), v);
    }
  }
  for (const auto& [name, kvs] : sections) {
    out << "\n[" << name << "]\n";
    for (const auto& [k, v] : kvs) out << k << " = " << v << '\n';
  }
  return out.str();
}

}  // namespace pathxai
