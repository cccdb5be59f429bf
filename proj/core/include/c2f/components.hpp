#pragma once

// 3D connected-component analysis of binary masks and the kidney-count
// criterion: exactly two components at or above the voxel threshold is a
// normal coarse result, anything else is abnormal.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "c2f/volume.hpp"

namespace c2f {

enum class Connectivity : std::uint8_t { faces = 6, full = 26 };

/// Parses 6 or 26; throws otherwise.
Connectivity connectivity_from_int(int n);

/// Component id per voxel: 0 background, 1..K in first-encounter scan order.
class LabelMap3D {
 public:
  LabelMap3D(Dims3 dims, Spacing spacing, std::vector<std::uint32_t> labels,
             std::uint32_t n_components);

  const Dims3& dims() const noexcept { return dims_; }
  const Spacing& spacing() const noexcept { return spacing_; }
  std::span<const std::uint32_t> data() const noexcept { return labels_; }
  std::uint32_t component_count() const noexcept { return n_components_; }
  std::uint32_t at(std::size_t z, std::size_t r, std::size_t c) const {
    return labels_[(z * dims_.rows + r) * dims_.cols + c];
  }

 private:
  Dims3 dims_;
  Spacing spacing_;
  std::vector<std::uint32_t> labels_;
  std::uint32_t n_components_;
};

struct ComponentStats {
  std::uint32_t id = 0;
  std::size_t voxel_count = 0;
  double volume_ml = 0.0;
  /// (depth, row, col) in voxel coordinates.
  std::array<double, 3> centroid{};
};

enum class Verdict : std::uint8_t { normal, abnormal };

const char* to_string(Verdict v);

struct AbnormalityVerdict {
  std::size_t n_kidney = 0;
  Verdict verdict = Verdict::abnormal;
  std::vector<std::uint32_t> kidney_ids;
};

inline constexpr std::size_t kDefaultVoxelThreshold = 10000;

/// Two-pass union-find labeling.
LabelMap3D label_components(const Mask3D& mask, Connectivity conn = Connectivity::full);

/// Sorted by voxel_count descending, ties by ascending id.
std::vector<ComponentStats> component_stats(const LabelMap3D& lm);

AbnormalityVerdict classify(std::span<const ComponentStats> stats, std::size_t th_vn);

/// Keeps only components with at least th_vn voxels.
Mask3D remove_small(const LabelMap3D& lm, std::size_t th_vn);

/// Mean (depth, row, col) of all foreground voxels; nullopt for an empty mask.
std::optional<std::array<double, 3>> foreground_centroid(const Mask3D& mask);

}  // namespace c2f
