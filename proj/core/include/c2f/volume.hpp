#pragma once

// Volumetric data model: voxel grids with physical spacing, 2D planes cut
// from them, and the bookkeeping that turns voxel counts into milliliters.
//
// Axis order is (depth, rows, cols) everywhere. Axial slices are (rows, cols)
// planes indexed by depth; sagittal slices are (depth, rows) planes indexed
// by column.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace c2f {

/// Physical voxel size in millimeters along (depth, rows, cols).
struct Spacing {
  float d = 1.0f;
  float h = 1.0f;
  float w = 1.0f;

  Spacing() = default;
  Spacing(float d_mm, float h_mm, float w_mm);

  bool operator==(const Spacing&) const = default;
};

struct Dims3 {
  std::size_t depth = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t count() const noexcept { return depth * rows * cols; }
  bool operator==(const Dims3&) const = default;
};

struct Dims2 {
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t count() const noexcept { return rows * cols; }
  bool operator==(const Dims2&) const = default;
};

struct PixelSpacing {
  double row = 1.0;
  double col = 1.0;

  bool operator==(const PixelSpacing&) const = default;
};

enum class Plane : std::uint8_t { axial, sagittal };

std::string to_string(Plane p);
std::string to_string(const Dims3& d);
std::string to_string(const Dims2& d);

namespace detail {

template <typename T>
class Grid3 {
 public:
  Grid3() = default;

  const Dims3& dims() const noexcept { return dims_; }
  const Spacing& spacing() const noexcept { return spacing_; }
  std::span<const T> data() const noexcept { return data_; }
  std::size_t size() const noexcept { return data_.size(); }

  std::size_t index(std::size_t z, std::size_t r, std::size_t c) const noexcept {
    return (z * dims_.rows + r) * dims_.cols + c;
  }
  T at(std::size_t z, std::size_t r, std::size_t c) const { return data_[index(z, r, c)]; }

  bool operator==(const Grid3&) const = default;

 protected:
  Grid3(Dims3 dims, Spacing spacing, std::vector<T> data);

  Dims3 dims_{};
  Spacing spacing_{};
  std::vector<T> data_;
};

}  // namespace detail

/// Scalar intensity volume (32-bit float, finite values only).
class Volume3D : public detail::Grid3<float> {
 public:
  Volume3D() = default;
  Volume3D(Dims3 dims, Spacing spacing, std::vector<float> data);
  /// Zero-filled volume.
  Volume3D(Dims3 dims, Spacing spacing);
};

/// Binary foreground mask; every voxel is 0 or 1.
class Mask3D : public detail::Grid3<std::uint8_t> {
 public:
  Mask3D() = default;
  Mask3D(Dims3 dims, Spacing spacing, std::vector<std::uint8_t> data);
  /// All-background mask.
  Mask3D(Dims3 dims, Spacing spacing);

  std::size_t foreground_count() const noexcept;
};

/// A single 2D plane. Used for intensities, probabilities, and 0/1 labels.
class Slice2D {
 public:
  Slice2D() = default;
  Slice2D(Dims2 dims, PixelSpacing spacing, std::vector<float> data, Plane plane = Plane::axial,
          std::size_t index = 0);
  /// Zero-filled slice.
  Slice2D(Dims2 dims, PixelSpacing spacing, Plane plane = Plane::axial, std::size_t index = 0);

  const Dims2& dims() const noexcept { return dims_; }
  std::size_t rows() const noexcept { return dims_.rows; }
  std::size_t cols() const noexcept { return dims_.cols; }
  const PixelSpacing& pixel_spacing() const noexcept { return spacing_; }
  Plane plane() const noexcept { return plane_; }
  std::size_t index() const noexcept { return index_; }

  std::span<const float> data() const noexcept { return data_; }
  std::span<float> data() noexcept { return data_; }
  float at(std::size_t r, std::size_t c) const { return data_[r * dims_.cols + c]; }
  float& at(std::size_t r, std::size_t c) { return data_[r * dims_.cols + c]; }

  Slice2D with_geometry(PixelSpacing spacing, Plane plane, std::size_t index) const;

  bool operator==(const Slice2D&) const = default;

 private:
  Dims2 dims_{};
  PixelSpacing spacing_{};
  std::vector<float> data_;
  Plane plane_ = Plane::axial;
  std::size_t index_ = 0;
};

/// Per-pixel foreground probabilities in [0, 1].
class ProbMap2D {
 public:
  ProbMap2D() = default;
  explicit ProbMap2D(Slice2D slice);

  const Slice2D& slice() const noexcept { return slice_; }
  const Dims2& dims() const noexcept { return slice_.dims(); }
  std::span<const float> data() const noexcept { return slice_.data(); }
  float at(std::size_t r, std::size_t c) const { return slice_.at(r, c); }

 private:
  Slice2D slice_;
};

inline constexpr float kDefaultProbThreshold = 0.5f;

std::vector<Slice2D> extract_slices(const Volume3D& vol, Plane plane);
/// Label slices carry 0.0f / 1.0f.
std::vector<Slice2D> extract_slices(const Mask3D& mask, Plane plane);

/// Number of slices a plane produces for the given geometry, and their dims.
std::size_t slice_count(const Dims3& dims, Plane plane);
Dims2 slice_dims(const Dims3& dims, Plane plane);

/// Inverse of extract_slices. No binarization is performed.
Volume3D compose_volume(std::span<const Slice2D> slices, Plane plane, Dims3 dims, Spacing spacing);
/// Like compose_volume, but every value must already be exactly 0 or 1.
Mask3D compose_mask(std::span<const Slice2D> slices, Plane plane, Dims3 dims, Spacing spacing);

/// n_voxels * d*h*w / 1000.
double voxel_volume_ml(const Spacing& spacing, std::size_t n_voxels);

/// 1 where prob >= threshold. Threshold must lie in (0, 1).
Slice2D binarize(const ProbMap2D& prob, float threshold = kDefaultProbThreshold);
Mask3D binarize(const Volume3D& prob, float threshold = kDefaultProbThreshold);

Mask3D mask_union(const Mask3D& a, const Mask3D& b);

}  // namespace c2f
