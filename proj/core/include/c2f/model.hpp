#pragma once

#include <memory>

#include "c2f/unet.hpp"
#include "c2f/volume.hpp"

namespace c2f {

/// A per-slice segmentation function: slice in, probabilities of the same
/// dims out. Implementations must be deterministic and safe to call
/// concurrently.
class SegmentationModel {
 public:
  virtual ~SegmentationModel() = default;
  virtual ProbMap2D predict(const Slice2D& slice) const = 0;
};

/// Analytic stand-in: 1 where intensity >= level, else 0.
class ThresholdModel final : public SegmentationModel {
 public:
  explicit ThresholdModel(float level) : level_(level) {}
  ProbMap2D predict(const Slice2D& slice) const override;

 private:
  float level_;
};

/// U-Net with frozen weights.
class UNetModel final : public SegmentationModel {
 public:
  UNetModel(UNetSpec spec, ModelWeights weights);
  ProbMap2D predict(const Slice2D& slice) const override;

  const UNetSpec& spec() const noexcept { return spec_; }
  const ModelWeights& weights() const noexcept { return weights_; }

 private:
  UNetSpec spec_;
  ModelWeights weights_;
};

std::shared_ptr<const SegmentationModel> threshold_model(float level);

}  // namespace c2f
