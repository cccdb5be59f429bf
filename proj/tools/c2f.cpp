// c2f: phantom-gen, train, predict, eval.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "c2f/config.hpp"
#include "c2f/error.hpp"
#include "c2f/metrics.hpp"
#include "c2f/model.hpp"
#include "c2f/nifti.hpp"
#include "c2f/phantom.hpp"
#include "c2f/pipeline.hpp"
#include "c2f/report.hpp"
#include "c2f/rvol.hpp"
#include "c2f/train.hpp"
#include "c2f/weights_io.hpp"

namespace fs = std::filesystem;
using namespace c2f;

namespace {

constexpr const char* kImageSuffix = "_image.rvol";
constexpr const char* kMaskSuffix = "_mask.rvol";

RunConfig config_or_default(const std::string& path) {
  return path.empty() ? RunConfig{} : load_config(path);
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::string case_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "case_%03zu", i);
  return buf;
}

/// Case ids with both an image and a mask file, sorted.
std::vector<std::string> case_ids(const fs::path& dir) {
  std::vector<std::string> ids;
  if (!fs::is_directory(dir)) throw Error("not a directory: '" + dir.string() + "'");
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (!ends_with(name, kImageSuffix)) continue;
    const std::string id = name.substr(0, name.size() - std::string(kImageSuffix).size());
    if (fs::exists(dir / (id + kMaskSuffix))) ids.push_back(id);
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::shared_ptr<const SegmentationModel> load_model(const std::string& arg, const UNetSpec& spec) {
  const std::string prefix = "threshold:";
  if (arg.starts_with(prefix)) return threshold_model(std::stof(arg.substr(prefix.size())));
  return std::make_shared<UNetModel>(spec, load_weights(arg));
}

Volume3D load_input(const std::string& path, NiftiDepthAxis axis) {
  if (ends_with(path, ".nii") || ends_with(path, ".nii.gz")) return read_nifti(path, axis);
  return read_volume(path);
}

int cmd_phantom_gen(std::size_t count, const std::string& out, std::uint64_t seed, double single_fraction,
                    const std::string& config) {
  if (single_fraction < 0.0 || single_fraction > 1.0) throw Error("--single-kidney-fraction must be in [0, 1]");
  const RunConfig cfg = config_or_default(config);
  fs::create_directories(out);
  const auto n_single = static_cast<std::size_t>(std::lround(single_fraction * double(count)));
  for (std::size_t i = 0; i < count; ++i) {
    PhantomSpec spec = cfg.phantom;
    spec.seed = seed * 1000003ULL + i;
    spec.n_kidneys = i >= count - n_single ? 1 : 2;
    const Phantom ph = generate_phantom(spec);
    const fs::path base = fs::path(out) / case_name(i);
    write_volume(ph.image, base.string() + kImageSuffix);
    write_volume(ph.mask, base.string() + kMaskSuffix);
  }
  std::cout << "wrote " << count << " phantom pairs to " << out << "\n";
  return 0;
}

int cmd_train(const std::string& stage_name, const std::string& data, const std::string& config,
              const std::string& out) {
  const Stage stage = stage_from_string(stage_name);
  const RunConfig cfg = config_or_default(config);
  cfg.pipeline.validate_for(cfg.unet);
  std::vector<LabeledCase> cases;
  for (const auto& id : case_ids(data)) {
    const fs::path base = fs::path(data) / id;
    LabeledCase c{id, read_volume(base.string() + kImageSuffix), read_mask(base.string() + kMaskSuffix)};
    cases.push_back(normalize_case(c, cfg.pipeline));
  }
  std::vector<TrainingPair> pairs;
  switch (stage) {
    case Stage::coarse: pairs = prepare_coarse_set(cases, cfg.pipeline, cfg.retain_empty_slices); break;
    case Stage::fine: pairs = prepare_fine_set(cases, cfg.pipeline); break;
    case Stage::abnormal: pairs = prepare_abnormal_set(cases, cfg.pipeline); break;
  }
  if (pairs.empty()) throw Error("no training pairs in '" + data + "'");
  std::cout << stage_name << ": " << cases.size() << " cases, " << pairs.size() << " pairs\n";
  const FitResult fit_result = fit(cfg.unet, pairs, cfg.hyper(stage), [](int epoch, double loss) {
    std::printf("epoch %d loss %.6f\n", epoch, loss);
    std::fflush(stdout);
  });
  save_weights(fit_result.weights, out);
  return 0;
}

int cmd_predict(const std::string& input, const std::string& coarse, const std::string& abnormal,
                const std::string& fine, const std::string& config, const std::string& out,
                const std::string& emit_coarse, const std::string& report) {
  const RunConfig cfg = config_or_default(config);
  cfg.pipeline.validate_for(cfg.unet);
  const StageModels models{load_model(coarse, cfg.unet), load_model(abnormal, cfg.unet),
                           load_model(fine, cfg.unet)};
  const Volume3D vol = load_input(input, cfg.nifti_depth_axis);
  const CaseResult r = run_case(vol, models, cfg.pipeline);
  write_volume(r.fine_mask, out);
  if (!emit_coarse.empty()) write_volume(r.coarse_mask, emit_coarse);
  if (!report.empty()) {
    std::string id = fs::path(input).filename().string();
    for (const char* sfx : {".nii.gz", ".nii", ".rvol"}) {
      if (ends_with(id, sfx)) {
        id.resize(id.size() - std::string(sfx).size());
        break;
      }
    }
    if (ends_with(id, "_image")) id.resize(id.size() - 6);
    write_case_report(id, r, report);
  }
  std::cout << "verdict " << to_string(r.verdict.verdict) << ", fine voxels " << r.fine_mask.foreground_count();
  for (const auto& f : r.flags) std::cout << " [" << f << "]";
  std::cout << "\n";
  return 0;
}

int cmd_eval(const std::string& pred, const std::string& gt, const std::string& report) {
  std::vector<CaseScore> scores;
  std::vector<CaseFailure> failures;
  std::vector<std::string> ids;
  if (!fs::is_directory(gt)) throw Error("not a directory: '" + gt + "'");
  for (const auto& e : fs::directory_iterator(gt)) {
    const std::string name = e.path().filename().string();
    if (ends_with(name, kMaskSuffix)) ids.push_back(name.substr(0, name.size() - std::string(kMaskSuffix).size()));
  }
  std::sort(ids.begin(), ids.end());
  for (const auto& id : ids) {
    try {
      const Mask3D truth = read_mask((fs::path(gt) / (id + kMaskSuffix)).string());
      const fs::path base = fs::path(pred) / id;
      CaseScore s{id, 0.0, 0.0, "unknown"};
      s.fine_dsc = dsc(read_mask(base.string() + "_fine.rvol"), truth);
      s.coarse_dsc = dsc(read_mask(base.string() + "_coarse.rvol"), truth);
      if (fs::exists(base.string() + "_report.json")) s.verdict = read_case_verdict(base.string() + "_report.json");
      scores.push_back(std::move(s));
    } catch (const std::exception& e) {
      failures.push_back({id, e.what()});
    }
  }
  const Evaluation ev = finalize_evaluation(std::move(scores), std::move(failures));
  write_report(ev, report);
  std::cout << format_report_text(ev);
  if (!ev.failures.empty()) {
    std::cerr << ev.failures.size() << " case(s) failed; see " << report << "\n";
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coarse-to-fine kidney segmentation"};
  app.require_subcommand(1);

  std::size_t count = 0;
  std::string out, data, config, stage, input, coarse, abnormal, fine, emit_coarse, report, pred, gt;
  std::uint64_t seed = 0;
  double single_fraction = 0.0;

  auto* gen = app.add_subcommand("phantom-gen", "Write synthetic image/mask pairs");
  gen->add_option("--count", count, "Number of cases")->required();
  gen->add_option("--out", out, "Output directory")->required();
  gen->add_option("--seed", seed, "Random seed")->required();
  gen->add_option("--single-kidney-fraction", single_fraction, "Fraction of one-kidney cases");
  gen->add_option("--config", config, "Run configuration file");

  auto* train = app.add_subcommand("train", "Train one stage");
  train->add_option("--stage", stage, "coarse, fine, or abnormal")->required();
  train->add_option("--data", data, "Directory of case_*_image/mask.rvol")->required();
  train->add_option("--config", config, "Run configuration file");
  train->add_option("--out", out, "Weights file")->required();

  auto* predict = app.add_subcommand("predict", "Run the pipeline on one volume");
  predict->add_option("--input", input, "RVOL or NIfTI volume")->required();
  predict->add_option("--coarse", coarse, "Weights or threshold:LEVEL")->required();
  predict->add_option("--abnormal", abnormal, "Weights or threshold:LEVEL")->required();
  predict->add_option("--fine", fine, "Weights or threshold:LEVEL")->required();
  predict->add_option("--config", config, "Run configuration file");
  predict->add_option("--out", out, "Fine mask (RVOL)")->required();
  predict->add_option("--emit-coarse", emit_coarse, "Also write the coarse mask");
  predict->add_option("--report", report, "Per-case JSON report");

  auto* eval = app.add_subcommand("eval", "Score predictions against ground truth");
  eval->add_option("--pred", pred, "Directory of <id>_fine.rvol / <id>_coarse.rvol")->required();
  eval->add_option("--gt", gt, "Directory of <id>_mask.rvol")->required();
  eval->add_option("--report", report, "Report path (JSON copy at PATH.json)")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return cmd_phantom_gen(count, out, seed, single_fraction, config);
    if (*train) return cmd_train(stage, data, config, out);
    if (*predict) return cmd_predict(input, coarse, abnormal, fine, config, out, emit_coarse, report);
    if (*eval) return cmd_eval(pred, gt, report);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
