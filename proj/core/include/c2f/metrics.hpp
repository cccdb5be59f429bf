#pragma once

#include <span>
#include <string>
#include <vector>

#include "c2f/components.hpp"
#include "c2f/pipeline.hpp"
#include "c2f/volume.hpp"

namespace c2f {

/// Volumetric Dice: 2|A n B| / (|A| + |B|); 1.0 when both are empty.
double dsc(const Mask3D& a, const Mask3D& b);

struct Summary {
  double mean = 0.0;
  /// Sample standard deviation (n - 1); 0 for a single score.
  double std = 0.0;
  double max = 0.0;
  double min = 0.0;
};

Summary summarize(std::span<const double> scores);

struct CaseScore {
  std::string case_id;
  double coarse_dsc = 0.0;
  double fine_dsc = 0.0;
  /// "Normal", "Abnormal", or "unknown" when not recorded.
  std::string verdict;
};

struct CaseFailure {
  std::string case_id;
  std::string message;
};

struct Evaluation {
  std::vector<CaseScore> scores;  // sorted by case_id
  std::vector<CaseFailure> failures;
  Summary coarse;
  Summary fine;
  bool has_summary = false;
};

/// Sorts scores by id and fills the two summary rows (when any score exists).
Evaluation finalize_evaluation(std::vector<CaseScore> scores, std::vector<CaseFailure> failures);

/// Runs the full pipeline on every case and scores both stages against the
/// case labels. Per-case failures are recorded, not thrown.
Evaluation evaluate_split(std::span<const LabeledCase> cases, const StageModels& models,
                          const PipelineConfig& cfg);

}  // namespace c2f
