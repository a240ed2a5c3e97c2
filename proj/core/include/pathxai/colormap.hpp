#pragma once

#include <array>
#include <cstdint>

namespace pathxai {

using Rgb8 = std::array<std::uint8_t, 3>;

/// 256-entry jet lookup table: index 0 is dark blue (cold), 255 dark red (hot).
const std::array<Rgb8, 256>& jet_table();

/// Colour for a relevance value in [0, 1]; out-of-range values are clamped.
Rgb8 jet(double value);

}  // namespace pathxai
