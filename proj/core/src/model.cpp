#include "c2f/model.hpp"

#include <algorithm>

#include "c2f/error.hpp"

namespace c2f {

ProbMap2D ThresholdModel::predict(const Slice2D& slice) const {
  std::vector<float> out(slice.data().size());
  const auto src = slice.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = src[i] >= level_ ? 1.0f : 0.0f;
  return ProbMap2D(Slice2D(slice.dims(), slice.pixel_spacing(), std::move(out), slice.plane(),
                           slice.index()));
}

UNetModel::UNetModel(UNetSpec spec, ModelWeights weights)
    : spec_(spec), weights_(std::move(weights)) {
  check_weights(spec_, weights_);
}

ProbMap2D UNetModel::predict(const Slice2D& slice) const {
  Tensor4<float> x({1, 1, slice.rows(), slice.cols()},
                   std::vector<float>(slice.data().begin(), slice.data().end()));
  Tensor4<float> p = unet_forward(spec_, weights_, x);
  // exp() can round a saturated sigmoid a hair outside [0, 1].
  std::vector<float> out(p.data().begin(), p.data().end());
  for (auto& v : out) v = std::clamp(v, 0.0f, 1.0f);
  return ProbMap2D(
      Slice2D(slice.dims(), slice.pixel_spacing(), std::move(out), slice.plane(), slice.index()));
}

std::shared_ptr<const SegmentationModel> threshold_model(float level) {
  return std::make_shared<ThresholdModel>(level);
}

}  // namespace c2f
