#pragma once

#include <cstdint>
#include <span>

namespace c2f {

/// CRC-32 (IEEE 802.3, as used by zlib/gzip/PNG).
std::uint32_t crc32(std::span<const unsigned char> bytes);

}  // namespace c2f
