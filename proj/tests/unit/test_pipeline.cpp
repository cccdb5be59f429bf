#include <doctest.h>

#include "c2f/error.hpp"
#include "c2f/metrics.hpp"
#include "c2f/pipeline.hpp"
#include "support/oracles.hpp"

using namespace c2f;

namespace {

Phantom phantom(std::uint64_t seed, int kidneys = 2) {
  PhantomSpec spec;
  spec.seed = seed;
  spec.n_kidneys = kidneys;
  return generate_phantom(spec);
}

StageModels oracles() {
  const auto t = threshold_model(0.5f);
  return {t, t, t};
}

StageModels blinded() {
  const auto t = threshold_model(0.5f);
  return {std::make_shared<testing::BlindedThreshold>(0.5f, 0.5, 1.0), t, t};
}

}  // namespace

TEST_CASE("coarse set from a full-sized case") {
  std::vector<LabeledCase> cases{{"big", Volume3D({80, 512, 512}, {3, 0.7816f, 0.7816f}),
                                  Mask3D({80, 512, 512}, {3, 0.7816f, 0.7816f})}};
  const auto pairs = prepare_coarse_set(cases, PipelineConfig{});
  REQUIRE(pairs.size() == 80);
  CHECK(pairs[0].image.dims() == Dims2{128, 128});
  CHECK(prepare_coarse_set(cases, PipelineConfig{}, false).empty());
}

TEST_CASE("coarse labels stay binary and empty slices are retained") {
  const auto ph = phantom(1);
  std::vector<LabeledCase> cases{{"a", ph.image, ph.mask}};
  const auto cfg = testing::desk_pipeline();
  const auto pairs = prepare_coarse_set(cases, cfg);
  CHECK(pairs.size() == ph.image.dims().depth);
  std::size_t empty = 0;
  for (const auto& p : pairs) {
    bool any = false;
    for (float v : p.label.data()) {
      CHECK((v == 0.0f || v == 1.0f));
      any = any || v > 0;
    }
    empty += !any;
  }
  CHECK(empty > 0);
  CHECK(prepare_coarse_set(cases, cfg, false).size() == pairs.size() - empty);
}

TEST_CASE("fine windows follow each kidney") {
  const auto ph = phantom(2);
  const auto cfg = testing::desk_pipeline();
  const auto windows = fine_windows(ph.mask, cfg);
  REQUIRE(windows.size() == 2);
  const auto lm = label_components(ph.mask);
  for (const auto& w : windows) {
    // Brute-force centroid of this component.
    double r = 0, c = 0, n = 0;
    std::size_t zmin = 1000, zmax = 0;
    const auto& d = lm.dims();
    for (std::size_t z = 0; z < d.depth; ++z)
      for (std::size_t y = 0; y < d.rows; ++y)
        for (std::size_t x = 0; x < d.cols; ++x)
          if (lm.at(z, y, x) == w.component_id) {
            r += double(y);
            c += double(x);
            n += 1;
            zmin = std::min(zmin, z);
            zmax = std::max(zmax, z);
          }
    CHECK(w.center == Pixel{long(std::floor(r / n + 0.5)), long(std::floor(c / n + 0.5))});
    CHECK(w.first_slice == zmin - cfg.fine_slice_margin);
    CHECK(w.last_slice == zmax + cfg.fine_slice_margin);
  }
  std::vector<LabeledCase> cases{{"a", ph.image, ph.mask}};
  const auto pairs = prepare_fine_set(cases, cfg);
  std::size_t expected = 0;
  for (const auto& w : windows) expected += w.last_slice - w.first_slice + 1;
  CHECK(pairs.size() == expected);
  CHECK(pairs[0].image.dims() == cfg.fine_dims);
}

TEST_CASE("fine patches near the edge are zero padded") {
  std::vector<std::uint8_t> m(8 * 16 * 16, 0);
  for (std::size_t z = 2; z < 5; ++z) m[(z * 16 + 0) * 16 + 1] = 1;
  const Mask3D mask({8, 16, 16}, {1, 1, 1}, m);
  const Volume3D img({8, 16, 16}, {1, 1, 1}, std::vector<float>(8 * 16 * 16, 1.0f));
  auto cfg = testing::desk_pipeline();
  cfg.fine_dims = {8, 8};
  cfg.th_vn = 1;
  std::vector<LabeledCase> cases{{"edge", img, mask}};
  const auto pairs = prepare_fine_set(cases, cfg);
  REQUIRE(!pairs.empty());
  CHECK(pairs[0].image.at(0, 0) == 0.0f);
  CHECK(pairs[0].image.at(7, 7) == 1.0f);
}

TEST_CASE("abnormal set geometry") {
  PipelineConfig cfg;
  // 64 x 256 sagittal patch at 3 x 0.7816 mm covers 192 x 200 mm.
  CHECK(double(cfg.abnormal_dims.rows) * cfg.normalized_spacing.d == doctest::Approx(192.0));
  CHECK(double(cfg.abnormal_dims.cols) * cfg.normalized_spacing.h == doctest::Approx(200.1).epsilon(1e-3));

  const auto desk = testing::desk_pipeline();
  const auto one = phantom(3, 1);
  std::vector<LabeledCase> cases{{"one", one.image, one.mask}};
  const auto pairs = prepare_abnormal_set(cases, desk);
  CHECK(pairs.size() == one.image.dims().cols);
  CHECK(pairs[0].image.dims() == desk.abnormal_dims);
  CHECK(pairs[0].image.plane() == Plane::sagittal);
}

TEST_CASE("coarse stage with a threshold oracle") {
  const auto ph = phantom(4);
  const auto cfg = testing::desk_pipeline();
  const auto s_c = predict_coarse(ph.image, oracles(), cfg);
  CHECK(s_c.dims() == ph.image.dims());
  CHECK(s_c.spacing() == ph.image.spacing());
  CHECK(dsc(s_c, ph.mask) > 0.9);
  const Volume3D blank(ph.image.dims(), ph.image.spacing());
  CHECK(predict_coarse(blank, oracles(), cfg).foreground_count() == 0);

  // With the coarse size equal to the slice size nothing is interpolated.
  auto exact = cfg;
  exact.coarse_dims = {96, 96};
  CHECK(predict_coarse(ph.image, oracles(), exact) == ph.mask);
}

TEST_CASE("normal guidance passes the coarse mask through") {
  const auto ph = phantom(5);
  const auto cfg = testing::desk_pipeline();
  const auto g = build_guidance(ph.image, ph.mask, {nullptr, nullptr, nullptr}, cfg);
  CHECK(g.verdict.verdict == Verdict::normal);
  CHECK(g.mask == ph.mask);
}

TEST_CASE("abnormal guidance recovers a missed kidney") {
  const auto ph = phantom(6);
  const auto cfg = testing::desk_pipeline();
  const auto s_c = predict_coarse(ph.image, blinded(), cfg);
  const auto g = build_guidance(ph.image, s_c, oracles(), cfg);
  CHECK(g.verdict.verdict == Verdict::abnormal);
  CHECK(g.verdict.n_kidney == 1);
  CHECK(g.mask == ph.mask);
  CHECK_FALSE(g.detection_failure);
  CHECK_THROWS_WITH(build_guidance(ph.image, s_c, {nullptr, nullptr, nullptr}, cfg),
                    doctest::Contains("abnormal"));
}

TEST_CASE("fine stage") {
  const auto ph = phantom(7);
  const auto cfg = testing::desk_pipeline();
  const auto f = predict_fine(ph.image, ph.mask, oracles(), cfg);
  CHECK(f.windows.size() == 2);
  CHECK(dsc(f.mask, ph.mask) == 1.0);

  // A bright voxel far from both kidneys never enters a crop window.
  std::vector<float> data(ph.image.data().begin(), ph.image.data().end());
  data[ph.image.index(0, 0, 48)] = 1.0f;
  const Volume3D spiked(ph.image.dims(), ph.image.spacing(), data);
  CHECK(predict_fine(spiked, ph.mask, oracles(), cfg).mask.at(0, 0, 48) == 0);

  const auto none = predict_fine(ph.image, Mask3D(ph.mask.dims(), ph.mask.spacing()), oracles(), cfg);
  CHECK(none.empty_guidance);
  CHECK(none.mask.foreground_count() == 0);
}

TEST_CASE("run_case end to end") {
  const auto cfg = testing::desk_pipeline();
  const auto ph = phantom(8);
  const auto r = run_case(ph.image, oracles(), cfg);
  CHECK(r.verdict.verdict == Verdict::normal);
  CHECK(dsc(r.fine_mask, ph.mask) == 1.0);
  CHECK(r.timings.coarse_ms >= 0.0);
  CHECK(r.timings.guidance_ms >= 0.0);
  CHECK(r.timings.fine_ms >= 0.0);
  CHECK(r.flags.empty());

  const auto b = run_case(ph.image, blinded(), cfg);
  CHECK(b.verdict.verdict == Verdict::abnormal);
  CHECK(dsc(b.fine_mask, ph.mask) > dsc(b.coarse_mask, ph.mask));

  const Volume3D blank(ph.image.dims(), ph.image.spacing());
  const auto e = run_case(blank, oracles(), cfg);
  CHECK(e.fine_mask.foreground_count() == 0);
  CHECK(e.flags == std::vector<std::string>{"detection failure", "empty guidance"});

  CHECK_THROWS_WITH(run_case(ph.image, {nullptr, nullptr, nullptr}, cfg), doctest::Contains("[coarse]"));
}

TEST_CASE("run_case returns masks in native geometry") {
  auto cfg = testing::desk_pipeline();
  cfg.normalized_spacing = {3.0f, 1.5632f, 1.5632f};
  cfg.coarse_dims = {64, 64};
  cfg.fine_dims = {96, 96};
  cfg.abnormal_dims = {32, 128};
  cfg.th_vn = 2500;
  const auto ph = phantom(9);
  const auto r = run_case(ph.image, oracles(), cfg);
  CHECK(r.fine_mask.dims() == ph.mask.dims());
  CHECK(r.fine_mask.spacing() == ph.mask.spacing());
  CHECK(r.coarse_mask.dims() == ph.mask.dims());
  CHECK(dsc(r.fine_mask, ph.mask) > 0.95);
}

TEST_CASE("config validation") {
  auto cfg = testing::desk_pipeline();
  CHECK_NOTHROW(cfg.validate_for(UNetSpec{1, 8, 2, 1}));
  CHECK_THROWS(cfg.validate_for(UNetSpec{1, 8, 5, 1}));
  cfg.prob_threshold = 1.0f;
  CHECK_THROWS(cfg.validate());
}
