// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

namespace ainet {

// Spreads the 32 bits of v onto the even bit positions of a 64-bit word.
constexpr std::uint64_t spread_bits(std::uint32_t v) {
  std::uint64_t x = v;
  x = (x | (x << 16)) & 0x0000ffff0000ffffULL;
  x = (x | (x << 8)) & 0x00ff00ff00ff00ffULL;
  x = (x | (x << 4)) & 0x0f0f0f0f0f0f0f0fULL;
  x = (x | (x << 2)) & 0x3333333333333333ULL;
  x = (x | (x << 1)) & 0x5555555555555555ULL;
  return x;
}

/// Z-order key: x on even bits, y on odd bits.
constexpr std::uint64_t morton_key(std::uint32_t x, std::uint32_t y) {
  return spread_bits(x) | (spread_bits(y) << 1);
}

static_assert(morton_key(1, 0) == 1 && morton_key(0, 1) == 2 && morton_key(1, 1) == 3);
static_assert(morton_key(2, 0) == 4 && morton_key(0xffffffffu, 0xffffffffu) == ~0ULL);

}  // namespace ainet
