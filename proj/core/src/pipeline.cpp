#include "c2f/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <sstream>

#include "c2f/error.hpp"

namespace c2f {

void PipelineConfig::validate() const {
  for (const Dims2& d : {coarse_dims, fine_dims, abnormal_dims}) {
    if (d.rows == 0 || d.cols == 0) throw Error("pipeline config: stage dims must be positive");
  }
  if (th_vn == 0) throw Error("pipeline config: th_vn must be positive");
  if (!(prob_threshold > 0.0f && prob_threshold < 1.0f)) {
    throw Error("pipeline config: prob_threshold must lie in (0, 1)");
  }
  Spacing(normalized_spacing.d, normalized_spacing.h, normalized_spacing.w);
}

void PipelineConfig::validate_for(const UNetSpec& spec) const {
  validate();
  const std::size_t div = spec.divisor();
  for (const Dims2& d : {coarse_dims, fine_dims, abnormal_dims}) {
    if (d.rows % div || d.cols % div) {
      throw Error("pipeline config: stage dims " + to_string(d) + " not divisible by " +
                  std::to_string(div));
    }
  }
}

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

void check_case(const LabeledCase& c) {
  if (c.image.dims() != c.label.dims()) {
    throw ShapeError("case '" + c.id + "': image " + to_string(c.image.dims()) + " vs label " +
                     to_string(c.label.dims()));
  }
}

void require_same_geometry(const Volume3D& vol, const Mask3D& m, const char* what) {
  if (vol.dims() != m.dims()) {
    throw ShapeError(std::string(what) + ": mask " + to_string(m.dims()) + " vs volume " +
                     to_string(vol.dims()));
  }
}

long clamp_index(double v, std::size_t extent) {
  const long r = long(std::floor(v + 0.5));
  return std::clamp(r, 0L, long(extent) - 1);
}

struct ComponentExtent {
  std::uint32_t id = 0;
  std::size_t z_min = 0;
  std::size_t z_max = 0;
  std::array<double, 3> centroid{};
};

std::vector<ComponentExtent> component_extents(const LabelMap3D& lm) {
  const auto stats = component_stats(lm);
  std::vector<ComponentExtent> ext(lm.component_count());
  for (std::uint32_t i = 0; i < lm.component_count(); ++i) {
    ext[i].id = i + 1;
    ext[i].z_min = lm.dims().depth;
  }
  const Dims3& d = lm.dims();
  for (std::size_t z = 0; z < d.depth; ++z)
    for (std::size_t i = 0; i < d.rows * d.cols; ++i) {
      const std::uint32_t id = lm.data()[z * d.rows * d.cols + i];
      if (!id) continue;
      auto& e = ext[id - 1];
      e.z_min = std::min(e.z_min, z);
      e.z_max = std::max(e.z_max, z);
    }
  for (const auto& s : stats) ext[s.id - 1].centroid = s.centroid;
  return ext;
}

std::vector<FineWindow> windows_for(const LabelMap3D& lm, const PipelineConfig& cfg) {
  std::vector<FineWindow> out;
  const Dims3& d = lm.dims();
  for (const auto& e : component_extents(lm)) {
    FineWindow w;
    w.component_id = e.id;
    w.first_slice = e.z_min >= cfg.fine_slice_margin ? e.z_min - cfg.fine_slice_margin : 0;
    w.last_slice = std::min(d.depth - 1, e.z_max + cfg.fine_slice_margin);
    w.center = {clamp_index(e.centroid[1], d.rows), clamp_index(e.centroid[2], d.cols)};
    out.push_back(w);
  }
  return out;
}

ProbMap2D run_model(const SegmentationModel* model, const Slice2D& input, const char* stage) {
  if (!model) throw Error(std::string("no model supplied for the ") + stage + " stage");
  ProbMap2D p = model->predict(input);
  if (p.dims() != input.dims()) {
    throw ShapeError(std::string(stage) + " model returned " + to_string(p.dims()) + " for input " +
                     to_string(input.dims()));
  }
  return p;
}

}  // namespace

std::vector<TrainingPair> prepare_coarse_set(std::span<const LabeledCase> cases,
                                             const PipelineConfig& cfg, bool retain_empty) {
  cfg.validate();
  std::vector<TrainingPair> out;
  for (const auto& c : cases) {
    check_case(c);
    const auto images = extract_slices(c.image, Plane::axial);
    const auto labels = extract_slices(c.label, Plane::axial);
    for (std::size_t k = 0; k < images.size(); ++k) {
      auto label = resize_slice(labels[k], cfg.coarse_dims, Interp::nearest).first;
      if (!retain_empty &&
          std::none_of(label.data().begin(), label.data().end(), [](float v) { return v > 0; })) {
        continue;
      }
      out.push_back({resize_slice(images[k], cfg.coarse_dims, Interp::linear).first, std::move(label)});
    }
  }
  return out;
}

std::vector<TrainingPair> prepare_fine_set(std::span<const LabeledCase> cases,
                                           const PipelineConfig& cfg) {
  cfg.validate();
  std::vector<TrainingPair> out;
  for (const auto& c : cases) {
    check_case(c);
    const LabelMap3D lm = label_components(c.label, cfg.connectivity);
    if (lm.component_count() == 0) {
      std::cerr << "warning: case '" << c.id << "' has no foreground; skipped for fine set\n";
      continue;
    }
    const auto images = extract_slices(c.image, Plane::axial);
    const auto labels = extract_slices(c.label, Plane::axial);
    for (const auto& w : windows_for(lm, cfg)) {
      for (std::size_t z = w.first_slice; z <= w.last_slice; ++z) {
        out.push_back({crop_patch(images[z], w.center, cfg.fine_dims).first,
                       crop_patch(labels[z], w.center, cfg.fine_dims).first});
      }
    }
  }
  return out;
}

std::vector<TrainingPair> prepare_abnormal_set(std::span<const LabeledCase> cases,
                                               const PipelineConfig& cfg) {
  cfg.validate();
  std::vector<TrainingPair> out;
  for (const auto& c : cases) {
    check_case(c);
    const auto centroid = foreground_centroid(c.label);
    if (!centroid) {
      std::cerr << "warning: case '" << c.id << "' has no foreground; skipped for abnormal set\n";
      continue;
    }
    const Pixel center{clamp_index((*centroid)[0], c.image.dims().depth),
                       clamp_index((*centroid)[1], c.image.dims().rows)};
    const auto images = extract_slices(c.image, Plane::sagittal);
    const auto labels = extract_slices(c.label, Plane::sagittal);
    for (std::size_t k = 0; k < images.size(); ++k) {
      out.push_back({crop_patch(images[k], center, cfg.abnormal_dims).first,
                     crop_patch(labels[k], center, cfg.abnormal_dims).first});
    }
  }
  return out;
}

std::vector<FineWindow> fine_windows(const Mask3D& guidance, const PipelineConfig& cfg) {
  const LabelMap3D kept =
      label_components(remove_small(label_components(guidance, cfg.connectivity), cfg.th_vn),
                       cfg.connectivity);
  return windows_for(kept, cfg);
}

Mask3D predict_coarse(const Volume3D& vol, const StageModels& models, const PipelineConfig& cfg) {
  cfg.validate();
  const auto slices = extract_slices(vol, Plane::axial);
  std::vector<Slice2D> probs;
  probs.reserve(slices.size());
  for (const auto& s : slices) {
    auto [small, rec] = resize_slice(s, cfg.coarse_dims, Interp::linear);
    const ProbMap2D p = run_model(models.coarse.get(), small, "coarse");
    probs.push_back(unresize(p, rec, Interp::linear).slice());
  }
  return binarize(compose_volume(probs, Plane::axial, vol.dims(), vol.spacing()), cfg.prob_threshold);
}

Guidance build_guidance(const Volume3D& vol, const Mask3D& s_c, const StageModels& models,
                        const PipelineConfig& cfg) {
  cfg.validate();
  require_same_geometry(vol, s_c, "build_guidance");
  const LabelMap3D lm = label_components(s_c, cfg.connectivity);
  const auto stats = component_stats(lm);
  Guidance g{s_c, classify(stats, cfg.th_vn), false};
  if (g.verdict.verdict == Verdict::normal) return g;

  const Dims3& d = vol.dims();
  const auto centroid = foreground_centroid(s_c);
  const Pixel center =
      centroid ? Pixel{clamp_index((*centroid)[0], d.depth), clamp_index((*centroid)[1], d.rows)}
               : Pixel{long(d.depth / 2), long(d.rows / 2)};

  const auto slices = extract_slices(vol, Plane::sagittal);
  std::vector<Slice2D> probs;
  probs.reserve(slices.size());
  for (const auto& s : slices) {
    auto [patch, rec] = crop_patch(s, center, cfg.abnormal_dims);
    const ProbMap2D p = run_model(models.abnormal.get(), patch, "abnormal");
    probs.push_back(uncrop_patch(p, rec).slice());
  }
  g.mask = binarize(compose_volume(probs, Plane::sagittal, d, vol.spacing()), cfg.prob_threshold);
  g.detection_failure = g.mask.foreground_count() == 0;
  return g;
}

FinePrediction predict_fine(const Volume3D& vol, const Mask3D& m, const StageModels& models,
                            const PipelineConfig& cfg) {
  cfg.validate();
  require_same_geometry(vol, m, "predict_fine");
  const Dims3& d = vol.dims();
  FinePrediction out{Mask3D(d, vol.spacing()), fine_windows(m, cfg), false};
  if (out.windows.empty()) {
    out.empty_guidance = true;
    return out;
  }

  const auto slices = extract_slices(vol, Plane::axial);
  std::vector<float> prob(d.count(), 0.0f);
  const std::size_t plane = d.rows * d.cols;
  for (const auto& w : out.windows) {
    for (std::size_t z = w.first_slice; z <= w.last_slice; ++z) {
      auto [patch, rec] = crop_patch(slices[z], w.center, cfg.fine_dims);
      const ProbMap2D p = run_model(models.fine.get(), patch, "fine");
      const ProbMap2D full = uncrop_patch(p, rec);
      float* dst = prob.data() + z * plane;
      const auto src = full.data();
      for (std::size_t i = 0; i < plane; ++i) dst[i] = std::max(dst[i], src[i]);
    }
  }
  out.mask = binarize(Volume3D(d, vol.spacing(), std::move(prob)), cfg.prob_threshold);
  return out;
}

CaseResult run_case(const Volume3D& vol, const StageModels& models, const PipelineConfig& cfg) {
  cfg.validate();
  const Dims3 native_dims = vol.dims();
  const Spacing native_spacing = vol.spacing();

  const Volume3D norm = [&] {
    try {
      return native_spacing == cfg.normalized_spacing
                 ? vol
                 : resample_volume(vol, cfg.normalized_spacing, Interp::linear);
    } catch (const Error& e) {
      throw StageError("resample", e.what());
    }
  }();
  auto to_native = [&](const Mask3D& m) {
    return m.dims() == native_dims && m.spacing() == native_spacing
               ? m
               : resample_mask_to(m, native_spacing, native_dims);
  };

  CaseResult result;
  Mask3D s_c;
  auto t0 = Clock::now();
  try {
    s_c = predict_coarse(norm, models, cfg);
  } catch (const Error& e) {
    throw StageError("coarse", e.what());
  }
  result.timings.coarse_ms = elapsed_ms(t0);

  Guidance guidance;
  t0 = Clock::now();
  try {
    guidance = build_guidance(norm, s_c, models, cfg);
  } catch (const Error& e) {
    throw StageError("guidance", e.what());
  }
  result.timings.guidance_ms = elapsed_ms(t0);
  if (guidance.detection_failure) result.flags.push_back("detection failure");

  FinePrediction fine;
  t0 = Clock::now();
  try {
    fine = predict_fine(norm, guidance.mask, models, cfg);
  } catch (const Error& e) {
    throw StageError("fine", e.what());
  }
  result.timings.fine_ms = elapsed_ms(t0);
  if (fine.empty_guidance) result.flags.push_back("empty guidance");

  result.verdict = std::move(guidance.verdict);
  result.coarse_mask = to_native(s_c);
  result.guidance = to_native(guidance.mask);
  result.fine_mask = to_native(fine.mask);
  return result;
}

LabeledCase normalize_case(const LabeledCase& c, const PipelineConfig& cfg) {
  if (c.image.spacing() == cfg.normalized_spacing) return c;
  return {c.id, resample_volume(c.image, cfg.normalized_spacing, Interp::linear),
          resample_mask(c.label, cfg.normalized_spacing)};
}

}  // namespace c2f
