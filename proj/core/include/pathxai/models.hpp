#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pathxai/network.hpp"

namespace pathxai {

enum class Family { plain_cnn, mini_resnet, mini_vgg };

std::string_view to_string(Family f);
/// Accepts "plain-cnn", "mini-resnet", "mini-vgg".
std::optional<Family> parse_family(std::string_view name);

struct ArchitectureSpec {
  Family family = Family::mini_vgg;
  std::size_t channels = 3;
  std::size_t height = 64;
  std::size_t width = 64;
  std::size_t classes = 2;
  /// One entry per pooling stage. Empty selects the family default.
  std::vector<std::size_t> widths;
  /// Width of the hidden dense layer in mini-vgg (0 disables it).
  std::size_t hidden = 32;
  std::uint64_t seed = 0;

  [[nodiscard]] std::vector<std::size_t> resolved_widths() const;
};

std::vector<std::size_t> default_widths(Family f);

/// Layer list only; every parameter is zero. Same spec -> identical structure.
Network build_structure(const ArchitectureSpec& spec);

/// build_structure plus He-uniform initialization of conv and dense weights from
/// `spec.seed` (biases zero, batchnorm scale one and shift zero).
Network build(const ArchitectureSpec& spec);

/// Re-initializes every conv and dense weight of `net` in layer order.
void he_uniform_init(Network& net, std::uint64_t seed);

}  // namespace pathxai
