#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>

#include "pathxai/network.hpp"

namespace pathxai {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Checkpoint {
  Network network;
  /// Free-form provenance (family, seed, epochs, ...). Keys and values must not
  /// contain whitespace-only or newline characters.
  std::map<std::string, std::string> metadata;
};

/// Line-oriented text container, version 1. Parameters are written as C99
/// hexadecimal floats so that save -> load is value-exact.
void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace pathxai
