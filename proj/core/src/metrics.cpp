#include "c2f/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "c2f/error.hpp"

namespace c2f {

double dsc(const Mask3D& a, const Mask3D& b) {
  if (a.dims() != b.dims()) {
    throw ShapeError("dsc: geometry mismatch " + to_string(a.dims()) + " vs " + to_string(b.dims()));
  }
  std::size_t inter = 0, na = 0, nb = 0;
  const auto da = a.data(), db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) {
    inter += da[i] & db[i];
    na += da[i];
    nb += db[i];
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * double(inter) / double(na + nb);
}

Summary summarize(std::span<const double> scores) {
  if (scores.empty()) throw Error("summarize: empty score list");
  Summary s;
  double sum = 0.0;
  for (double v : scores) sum += v;
  s.mean = sum / double(scores.size());
  if (scores.size() > 1) {
    double ss = 0.0;
    for (double v : scores) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / double(scores.size() - 1));
  }
  const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
  s.min = *lo;
  s.max = *hi;
  return s;
}

Evaluation finalize_evaluation(std::vector<CaseScore> scores, std::vector<CaseFailure> failures) {
  Evaluation ev;
  std::sort(scores.begin(), scores.end(),
            [](const CaseScore& a, const CaseScore& b) { return a.case_id < b.case_id; });
  std::sort(failures.begin(), failures.end(),
            [](const CaseFailure& a, const CaseFailure& b) { return a.case_id < b.case_id; });
  ev.scores = std::move(scores);
  ev.failures = std::move(failures);
  if (!ev.scores.empty()) {
    std::vector<double> coarse, fine;
    for (const auto& s : ev.scores) {
      coarse.push_back(s.coarse_dsc);
      fine.push_back(s.fine_dsc);
    }
    ev.coarse = summarize(coarse);
    ev.fine = summarize(fine);
    ev.has_summary = true;
  }
  return ev;
}

Evaluation evaluate_split(std::span<const LabeledCase> cases, const StageModels& models,
                          const PipelineConfig& cfg) {
  std::vector<CaseScore> scores;
  std::vector<CaseFailure> failures;
  for (const auto& c : cases) {
    try {
      const CaseResult r = run_case(c.image, models, cfg);
      scores.push_back({c.id, dsc(r.coarse_mask, c.label), dsc(r.fine_mask, c.label),
                        to_string(r.verdict.verdict)});
    } catch (const Error& e) {
      failures.push_back({c.id, e.what()});
    }
  }
  return finalize_evaluation(std::move(scores), std::move(failures));
}

}  // namespace c2f
