#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "c2f/unet.hpp"
#include "c2f/volume.hpp"

namespace c2f {

/// An image slice and its 0/1 label slice of identical dims.
struct TrainingPair {
  Slice2D image;
  Slice2D label;
};

struct TrainHyper {
  double lr = 0.05;
  /// 0 gives plain SGD.
  double momentum = 0.0;
  int epochs = 10;
  int batch = 4;
  std::uint64_t seed = 1;
  /// Pairs drawn per epoch after shuffling; 0 uses the whole set.
  std::size_t samples_per_epoch = 0;
  /// Rescales the whole gradient to this L2 norm when it is larger; 0 disables.
  double clip_norm = 0.0;
};

struct FitResult {
  ModelWeights weights;
  /// Mean mini-batch Dice loss of each epoch.
  std::vector<double> loss_trace;
};

using EpochCallback = std::function<void(int epoch, double mean_loss)>;

/// Minimizes the batch Dice loss with SGD. Bit-reproducible for a given seed.
FitResult fit(const UNetSpec& spec, std::span<const TrainingPair> dataset, const TrainHyper& hyper,
              const EpochCallback& on_epoch = {});

/// Same as fit, starting from the given weights instead of a seeded init.
FitResult fit_from(const UNetSpec& spec, ModelWeights initial, std::span<const TrainingPair> dataset,
                   const TrainHyper& hyper, const EpochCallback& on_epoch = {});

}  // namespace c2f
