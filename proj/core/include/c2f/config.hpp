#pragma once

// Flat "key = value" run configuration. Lines starting with '#' are
// comments. Unknown or repeated keys are rejected; absent keys keep their
// defaults. Training keys (lr, momentum, epochs, batch, seed,
// samples_per_epoch) apply to every stage and may be overridden per stage
// with a suffix, e.g. "epochs_fine = 20".

#include <array>
#include <iosfwd>
#include <string>

#include "c2f/nifti.hpp"
#include "c2f/phantom.hpp"
#include "c2f/pipeline.hpp"
#include "c2f/train.hpp"
#include "c2f/unet.hpp"

namespace c2f {

enum class Stage : std::uint8_t { coarse = 0, fine = 1, abnormal = 2 };

Stage stage_from_string(const std::string& s);
std::string to_string(Stage s);

struct RunConfig {
  PipelineConfig pipeline;
  UNetSpec unet;
  std::array<TrainHyper, 3> train;  // indexed by Stage
  bool retain_empty_slices = true;
  NiftiDepthAxis nifti_depth_axis = NiftiDepthAxis::slowest;
  /// Geometry and contrast for phantom-gen.
  PhantomSpec phantom;

  const TrainHyper& hyper(Stage s) const { return train[std::size_t(s)]; }
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
/// Canonical text form; parse_config(format_config(c)) reproduces c.
std::string format_config(const RunConfig& cfg);

}  // namespace c2f
