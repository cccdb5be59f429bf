#pragma once

// Synthetic abdominal phantoms: one or two ellipsoidal "kidneys" placed
// laterally in a noisy background, with the exact ellipsoid interiors as the
// ground-truth mask.

#include <array>
#include <cstdint>
#include <vector>

#include "c2f/volume.hpp"

namespace c2f {

struct MmRange {
  double min = 0.0;
  double max = 0.0;
};

struct PhantomSpec {
  Dims3 dims{64, 96, 96};
  /// In-plane spacing is the normalized 0.7816 mm scaled by 4 so a 96-pixel
  /// slice spans a typical abdominal field of view.
  Spacing spacing{3.0f, 3.1264f, 3.1264f};
  int n_kidneys = 2;
  /// Semi-axis ranges along (depth, rows, cols).
  std::array<MmRange, 3> semi_axes_mm{{{24.0, 33.0}, {25.0, 34.0}, {19.0, 25.0}}};
  float kidney_intensity = 1.0f;
  float background_intensity = 0.0f;
  float noise_sigma = 0.0f;
  /// Uniform jitter of kidney centers, in voxels, along (depth, rows, cols).
  std::array<double, 3> center_jitter{2.0, 4.0, 3.0};
  std::uint64_t seed = 0;
};

struct Ellipsoid {
  /// Voxel coordinates (depth, row, col).
  std::array<double, 3> center{};
  /// Millimeters along (depth, rows, cols).
  std::array<double, 3> semi_axes_mm{};
};

struct Phantom {
  Volume3D image;
  Mask3D mask;
  std::vector<Ellipsoid> kidneys;
};

/// Throws if an ellipsoid leaves the volume, ellipsoids overlap, or the
/// intensities coincide.
Phantom generate_phantom(const PhantomSpec& spec);

/// Rasterizes explicit ellipsoids; same validation as generate_phantom.
Phantom render_phantom(const PhantomSpec& spec, const std::vector<Ellipsoid>& kidneys);

}  // namespace c2f
