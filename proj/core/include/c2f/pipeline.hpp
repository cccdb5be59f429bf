#pragma once

// The coarse-to-fine testing flow and the matching training-set builders.
//
//   coarse:   every axial slice resized to coarse_dims, predicted, resized back
//   guidance: coarse result kept when it has exactly two kidney-sized
//             components; otherwise rebuilt from sagittal patches around the
//             coarse foreground centroid
//   fine:     one fixed axial window per guidance component, centered on its
//             projected centroid, over its slice range plus a margin

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "c2f/components.hpp"
#include "c2f/geometry.hpp"
#include "c2f/model.hpp"
#include "c2f/train.hpp"
#include "c2f/volume.hpp"

namespace c2f {

struct PipelineConfig {
  Spacing normalized_spacing{3.0f, 0.7816f, 0.7816f};
  Dims2 coarse_dims{128, 128};
  Dims2 fine_dims{160, 160};
  /// Sagittal patch as (depth, rows).
  Dims2 abnormal_dims{64, 256};
  std::size_t th_vn = kDefaultVoxelThreshold;
  float prob_threshold = kDefaultProbThreshold;
  Connectivity connectivity = Connectivity::full;
  /// Extra slices above and below each kidney's extent for fine windows.
  std::size_t fine_slice_margin = 2;

  void validate() const;
  /// Also checks stage dims against a network's divisibility requirement.
  void validate_for(const UNetSpec& spec) const;
};

struct StageModels {
  std::shared_ptr<const SegmentationModel> coarse;
  std::shared_ptr<const SegmentationModel> abnormal;
  std::shared_ptr<const SegmentationModel> fine;
};

/// A volume with its ground-truth mask, already at the normalized spacing
/// when used for training.
struct LabeledCase {
  std::string id;
  Volume3D image;
  Mask3D label;
};

struct Guidance {
  Mask3D mask;
  AbnormalityVerdict verdict;
  /// The abnormal branch ran and still produced an empty mask.
  bool detection_failure = false;
};

struct FineWindow {
  std::uint32_t component_id = 0;
  std::size_t first_slice = 0;
  std::size_t last_slice = 0;  // inclusive
  Pixel center;
};

struct FinePrediction {
  Mask3D mask;
  std::vector<FineWindow> windows;
  bool empty_guidance = false;
};

struct StageTimings {
  double coarse_ms = 0.0;
  double guidance_ms = 0.0;
  double fine_ms = 0.0;
};

struct CaseResult {
  /// All three masks are in the input volume's native geometry.
  Mask3D coarse_mask;
  AbnormalityVerdict verdict;
  Mask3D guidance;
  Mask3D fine_mask;
  StageTimings timings;
  std::vector<std::string> flags;
};

/// Resamples image (linear) and label (nearest) to the normalized spacing.
LabeledCase normalize_case(const LabeledCase& c, const PipelineConfig& cfg);

std::vector<TrainingPair> prepare_coarse_set(std::span<const LabeledCase> cases,
                                             const PipelineConfig& cfg, bool retain_empty = true);
std::vector<TrainingPair> prepare_fine_set(std::span<const LabeledCase> cases,
                                           const PipelineConfig& cfg);
std::vector<TrainingPair> prepare_abnormal_set(std::span<const LabeledCase> cases,
                                               const PipelineConfig& cfg);

/// Windows the fine stage would use for a guidance mask.
std::vector<FineWindow> fine_windows(const Mask3D& guidance, const PipelineConfig& cfg);

Mask3D predict_coarse(const Volume3D& vol, const StageModels& models, const PipelineConfig& cfg);
Guidance build_guidance(const Volume3D& vol, const Mask3D& s_c, const StageModels& models,
                        const PipelineConfig& cfg);
FinePrediction predict_fine(const Volume3D& vol, const Mask3D& m, const StageModels& models,
                            const PipelineConfig& cfg);

CaseResult run_case(const Volume3D& vol, const StageModels& models, const PipelineConfig& cfg);

}  // namespace c2f
