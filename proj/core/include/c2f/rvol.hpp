#pragma once

// RVOL raw volume file, little-endian:
//   "RVOL" | u32 version = 1 | u32 dims[3] (D, H, W) | f32 spacing[3] (d, h, w)
//   u8 dtype (0 = f32 intensity, 1 = u8 mask) | payload, row-major | u32 CRC32

#include <span>
#include <string>
#include <variant>
#include <vector>

#include "c2f/volume.hpp"

namespace c2f {

inline constexpr std::uint32_t kRvolVersion = 1;

enum class RvolType : std::uint8_t { intensity = 0, mask = 1 };

using AnyVolume = std::variant<Volume3D, Mask3D>;

std::vector<unsigned char> encode_rvol(const Volume3D& vol);
std::vector<unsigned char> encode_rvol(const Mask3D& mask);
AnyVolume decode_rvol(std::span<const unsigned char> bytes);

void write_volume(const Volume3D& vol, const std::string& path);
void write_volume(const Mask3D& mask, const std::string& path);
AnyVolume read_rvol(const std::string& path);
/// Requires dtype 0.
Volume3D read_volume(const std::string& path);
/// Requires dtype 1.
Mask3D read_mask(const std::string& path);

}  // namespace c2f
