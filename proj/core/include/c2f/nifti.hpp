#pragma once

// Read-only NIfTI-1 support (single-file "n+1", optionally gzip-wrapped).
// Supported datatypes: uint8 (2), int16 (4), float32 (16). A fourth
// dimension is accepted only when it has extent 1.

#include <cstdint>
#include <span>
#include <string>

#include "c2f/volume.hpp"

namespace c2f {

/// Which stored NIfTI axis becomes the depth (axial index) axis.
enum class NiftiDepthAxis : std::uint8_t {
  /// dim[3] (slowest varying) is depth; dims map to (dim3, dim2, dim1).
  slowest,
  /// dim[1] (fastest varying) is depth; dims map to (dim1, dim2, dim3).
  fastest,
};

NiftiDepthAxis nifti_depth_axis_from_string(const std::string& s);
std::string to_string(NiftiDepthAxis a);

Volume3D decode_nifti(std::span<const unsigned char> bytes,
                      NiftiDepthAxis axis = NiftiDepthAxis::slowest);

Volume3D read_nifti(const std::string& path, NiftiDepthAxis axis = NiftiDepthAxis::slowest);
/// Any nonzero label (kidney or tumor) becomes foreground.
Mask3D read_nifti_mask(const std::string& path, NiftiDepthAxis axis = NiftiDepthAxis::slowest);

}  // namespace c2f
