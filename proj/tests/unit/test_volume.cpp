#include <doctest.h>

#include "c2f/error.hpp"
#include "c2f/volume.hpp"
#include "support/oracles.hpp"

using namespace c2f;

TEST_CASE("axial and sagittal slice bookkeeping") {
  const Volume3D v({4, 6, 8}, {3, 1, 1});
  auto axial = extract_slices(v, Plane::axial);
  CHECK(axial.size() == 4);
  CHECK(axial[0].dims() == Dims2{6, 8});
  auto sag = extract_slices(v, Plane::sagittal);
  CHECK(sag.size() == 8);
  CHECK(sag[0].dims() == Dims2{4, 6});
  CHECK(sag[0].pixel_spacing() == PixelSpacing{3, 1});
}

TEST_CASE("voxel relocation") {
  std::vector<float> data(4 * 6 * 8, 0.0f);
  data[(2 * 6 + 3) * 8 + 5] = 7.0f;
  const Volume3D v({4, 6, 8}, {1, 1, 1}, data);
  CHECK(extract_slices(v, Plane::axial)[2].at(3, 5) == 7.0f);
  CHECK(extract_slices(v, Plane::sagittal)[5].at(2, 3) == 7.0f);
}

TEST_CASE("extract then compose is bit-exact") {
  const auto v = testing::random_volume({5, 5, 5}, {3, 0.5f, 0.5f}, 11);
  for (Plane p : {Plane::axial, Plane::sagittal}) {
    const auto s = extract_slices(v, p);
    CHECK(compose_volume(s, p, v.dims(), v.spacing()) == v);
  }
  const auto m = testing::random_mask({5, 7, 3}, 0.4, 12);
  const auto ms = extract_slices(m, Plane::sagittal);
  CHECK(compose_mask(ms, Plane::sagittal, m.dims(), m.spacing()) == m);
}

TEST_CASE("compose shape checks") {
  std::vector<Slice2D> three(3, Slice2D({4, 4}, {1, 1}));
  CHECK(compose_volume(three, Plane::axial, {3, 4, 4}, {1, 1, 1}).dims() == Dims3{3, 4, 4});
  std::vector<Slice2D> two(2, Slice2D({4, 4}, {1, 1}));
  CHECK_THROWS_AS(compose_volume(two, Plane::axial, {3, 4, 4}, {1, 1, 1}), ShapeError);
  std::vector<Slice2D> half(3, Slice2D({4, 4}, {1, 1}, std::vector<float>(16, 0.5f)));
  CHECK_THROWS_AS(compose_mask(half, Plane::axial, {3, 4, 4}, {1, 1, 1}), Error);
}

TEST_CASE("voxel volume in ml") {
  CHECK(std::abs(voxel_volume_ml({3, 0.7816f, 0.7816f}, 10000) - 18.327) < 0.001);
  CHECK(voxel_volume_ml({2, 2, 2}, 0) == 0.0);
  CHECK(voxel_volume_ml({1, 1, 1}, 1000) == 1.0);
}

TEST_CASE("binarize uses >=") {
  auto prob = [](std::vector<float> v, std::size_t cols) {
    const Dims2 d{v.size() / cols, cols};
    return ProbMap2D(Slice2D(d, {1, 1}, std::move(v)));
  };
  auto half = binarize(prob(std::vector<float>(4, 0.5f), 2));
  for (float x : half.data()) CHECK(x == 1.0f);
  auto below = binarize(prob(std::vector<float>(4, 0.49f), 2));
  for (float x : below.data()) CHECK(x == 0.0f);
  auto mixed = binarize(prob({0.2f, 0.9f}, 2));
  CHECK(mixed.at(0, 0) == 0.0f);
  CHECK(mixed.at(0, 1) == 1.0f);
  CHECK_THROWS(binarize(prob({0.2f, 0.9f}, 2), 1.0f));
  CHECK_THROWS(binarize(prob({0.2f, 0.9f}, 2), 0.0f));
}

TEST_CASE("value invariants") {
  CHECK_THROWS(Mask3D({1, 1, 2}, {1, 1, 1}, {0, 2}));
  CHECK_THROWS(Volume3D({1, 1, 1}, {1, 1, 1}, {std::nanf("")}));
  CHECK_THROWS(ProbMap2D(Slice2D({1, 1}, {1, 1}, {1.5f})));
  CHECK_THROWS(Spacing(0.0f, 1.0f, 1.0f));
  CHECK_THROWS(Volume3D({2, 2, 2}, {1, 1, 1}, std::vector<float>(7)));
}

TEST_CASE("mask union") {
  const Mask3D a({1, 1, 3}, {1, 1, 1}, {1, 0, 0});
  const Mask3D b({1, 1, 3}, {1, 1, 1}, {0, 0, 1});
  CHECK(mask_union(a, b) == Mask3D({1, 1, 3}, {1, 1, 1}, {1, 0, 1}));
  CHECK_THROWS_AS(mask_union(a, Mask3D({1, 3, 1}, {1, 1, 1})), ShapeError);
}
