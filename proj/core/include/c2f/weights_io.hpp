#pragma once

// Weight file, little-endian:
//   "C2FW" | u32 version = 1 | u32 parameter count
//   per parameter: u16 name length | UTF-8 name | u8 rank | u32 dims[rank] | f32 data
//   u32 CRC32 of all preceding bytes

#include <span>
#include <string>
#include <vector>

#include "c2f/unet.hpp"

namespace c2f {

inline constexpr std::uint32_t kWeightsVersion = 1;

std::vector<unsigned char> encode_weights(const ModelWeights& w);
ModelWeights decode_weights(std::span<const unsigned char> bytes);

void save_weights(const ModelWeights& w, const std::string& path);
ModelWeights load_weights(const std::string& path);

}  // namespace c2f
