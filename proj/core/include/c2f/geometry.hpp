#pragma once

// Spatial transforms used around the segmentation models, each with an exact
// inverse:
//   - resample_volume / resample_mask: change voxel spacing
//   - resize_slice / unresize:         fixed image size, pixel size floats
//   - crop_patch / uncrop_patch:       fixed pixel size, fixed image size
//
// Resampling maps output voxel i to source coordinate i * target / source,
// so voxel centers at index 0 coincide. Slice resizing uses pixel-center
// alignment: src = (i + 0.5) * src_len / dst_len - 0.5. Linear modes clamp at
// the edges; nearest modes never produce values absent from the input.

#include <array>
#include <cstddef>
#include <utility>

#include "c2f/volume.hpp"

namespace c2f {

enum class Interp : std::uint8_t { linear, nearest };

struct ResizeRecord {
  Dims2 original_dims;
  Dims2 target_dims;
  PixelSpacing original_pixel_spacing;
};

struct Pixel {
  long row = 0;
  long col = 0;
  bool operator==(const Pixel&) const = default;
};

struct CropPad {
  std::size_t top = 0;
  std::size_t bottom = 0;
  std::size_t left = 0;
  std::size_t right = 0;
  bool operator==(const CropPad&) const = default;
};

struct CropRecord {
  Plane plane = Plane::axial;
  Pixel center;
  Dims2 patch_dims;
  Dims2 source_dims;
  CropPad pad;

  /// Source coordinate of patch pixel (0, 0); may be negative.
  Pixel origin() const noexcept {
    return {center.row - long(patch_dims.rows / 2), center.col - long(patch_dims.cols / 2)};
  }
};

/// Output dims per axis: round-half-up(dim * source / target), at least 1.
Dims3 resampled_dims(const Dims3& dims, const Spacing& source, const Spacing& target);

Volume3D resample_volume(const Volume3D& vol, const Spacing& target,
                         Interp mode = Interp::linear);
Mask3D resample_mask(const Mask3D& mask, const Spacing& target);

/// Resample onto an explicit output grid (used to return to native geometry,
/// where rounding the dims independently could be off by one).
Volume3D resample_volume_to(const Volume3D& vol, const Spacing& target, const Dims3& dims,
                            Interp mode = Interp::linear);
Mask3D resample_mask_to(const Mask3D& mask, const Spacing& target, const Dims3& dims);

std::pair<Slice2D, ResizeRecord> resize_slice(const Slice2D& s, Dims2 target,
                                              Interp mode = Interp::linear);
Slice2D unresize(const Slice2D& s, const ResizeRecord& rec, Interp mode = Interp::linear);
ProbMap2D unresize(const ProbMap2D& p, const ResizeRecord& rec, Interp mode = Interp::linear);

/// Window of patch_dims around center; top/left get patch/2 rows/cols before
/// the center. Out-of-source pixels are zero and counted in the pad.
std::pair<Slice2D, CropRecord> crop_patch(const Slice2D& s, Pixel center, Dims2 patch_dims);
/// Places the patch back into a zero slice of rec.source_dims. The caller
/// supplies the pixel spacing (crops never change it).
Slice2D uncrop_patch(const Slice2D& p, const CropRecord& rec);
ProbMap2D uncrop_patch(const ProbMap2D& p, const CropRecord& rec);

}  // namespace c2f
