#include <doctest.h>

#include <cmath>
#include <cstring>
#include <memory>
#include <random>

#include "c2f/error.hpp"
#include "c2f/loss.hpp"
#include "c2f/model.hpp"
#include "c2f/phantom.hpp"
#include "c2f/train.hpp"
#include "c2f/unet.hpp"
#include "support/gradcheck.hpp"

using namespace c2f;

namespace {

// Direct-summation reference for every U-Net operation.
struct Naive {
  using T4 = Tensor4<double>;

  static T4 conv(const T4& in, const Parameter<double>& w, const Parameter<double>& b, bool relu) {
    const std::size_t O = w.shape[0], C = w.shape[1], K = w.shape[2], H = in.rows(), W = in.cols();
    const long half = long(K / 2);
    T4 out({in.batch(), O, H, W});
    for (std::size_t n = 0; n < in.batch(); ++n)
      for (std::size_t o = 0; o < O; ++o)
        for (std::size_t y = 0; y < H; ++y)
          for (std::size_t x = 0; x < W; ++x) {
            double acc = b.data[o];
            for (std::size_t c = 0; c < C; ++c)
              for (std::size_t ky = 0; ky < K; ++ky)
                for (std::size_t kx = 0; kx < K; ++kx) {
                  const long sy = long(y) + long(ky) - half, sx = long(x) + long(kx) - half;
                  if (sy < 0 || sx < 0 || sy >= long(H) || sx >= long(W)) continue;
                  acc += w.data[((o * C + c) * K + ky) * K + kx] * in.at(n, c, std::size_t(sy), std::size_t(sx));
                }
            out.at(n, o, y, x) = relu ? std::max(acc, 0.0) : acc;
          }
    return out;
  }

  static T4 pool(const T4& in) {
    T4 out({in.batch(), in.channels(), in.rows() / 2, in.cols() / 2});
    for (std::size_t n = 0; n < in.batch(); ++n)
      for (std::size_t c = 0; c < in.channels(); ++c)
        for (std::size_t y = 0; y < out.rows(); ++y)
          for (std::size_t x = 0; x < out.cols(); ++x)
            out.at(n, c, y, x) = std::max({in.at(n, c, 2 * y, 2 * x), in.at(n, c, 2 * y, 2 * x + 1),
                                           in.at(n, c, 2 * y + 1, 2 * x), in.at(n, c, 2 * y + 1, 2 * x + 1)});
    return out;
  }

  static T4 up_concat(const T4& skip, const T4& low) {
    const std::size_t Cs = skip.channels(), Cl = low.channels();
    T4 out({skip.batch(), Cs + Cl, skip.rows(), skip.cols()});
    for (std::size_t n = 0; n < skip.batch(); ++n)
      for (std::size_t y = 0; y < skip.rows(); ++y)
        for (std::size_t x = 0; x < skip.cols(); ++x) {
          for (std::size_t c = 0; c < Cs; ++c) out.at(n, c, y, x) = skip.at(n, c, y, x);
          for (std::size_t c = 0; c < Cl; ++c) out.at(n, Cs + c, y, x) = low.at(n, c, y / 2, x / 2);
        }
    return out;
  }

  static T4 forward(const UNetSpec& spec, const ParameterSet<double>& w, const T4& x) {
    std::size_t k = 0;
    auto next = [&](const T4& in, bool relu = true) {
      auto out = conv(in, w.params[k], w.params[k + 1], relu);
      k += 2;
      return out;
    };
    std::vector<T4> skips;
    T4 h = x;
    for (int l = 0; l < spec.depth; ++l) {
      h = next(next(h));
      skips.push_back(h);
      h = pool(h);
    }
    h = next(next(h));
    for (int l = spec.depth - 1; l >= 0; --l) h = next(next(up_concat(skips[std::size_t(l)], h)));
    h = next(h, false);
    for (auto& v : h.storage()) v = 1.0 / (1.0 + std::exp(-v));
    return h;
  }
};

}  // namespace

TEST_CASE("single conv against hand-computed values") {
  // Input 1..16 row-major; kernel picks center + 2 * right neighbour; bias 0.5.
  std::vector<double> x(16);
  for (int i = 0; i < 16; ++i) x[std::size_t(i)] = i + 1;
  Tensor4<double> in({1, 1, 4, 4}, x);
  Parameter<double> w{"w", {1, 1, 3, 3}, {0, 0, 0, 0, 1, 2, 0, 0, 0}};
  Parameter<double> b{"b", {1}, {0.5}};
  const auto out = conv3x3(in, w, b, false);
  const double want[16] = {5.5, 8.5, 11.5, 4.5, 17.5, 20.5, 23.5, 8.5,
                           29.5, 32.5, 35.5, 12.5, 41.5, 44.5, 47.5, 16.5};
  for (std::size_t i = 0; i < 16; ++i) CHECK(out.data()[i] == want[i]);

  Parameter<double> neg{"w", {1, 1, 3, 3}, {0, 0, 0, 0, -1, 0, 0, 0, 0}};
  const auto r = conv3x3(in, neg, b, true);
  for (double v : r.data()) CHECK(v == 0.0);
}

TEST_CASE("conv matches direct summation with several channels") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(-1, 1);
  Tensor4<double> in({2, 3, 6, 5});
  for (auto& v : in.storage()) v = u(gen);
  Parameter<double> w{"w", {4, 3, 3, 3}, std::vector<double>(4 * 27)};
  Parameter<double> b{"b", {4}, std::vector<double>(4)};
  for (auto& v : w.data) v = u(gen);
  for (auto& v : b.data) v = u(gen);
  const auto got = conv3x3(in, w, b, true);
  const auto want = Naive::conv(in, w, b, true);
  for (std::size_t i = 0; i < got.size(); ++i) CHECK(got.data()[i] == doctest::Approx(want.data()[i]).epsilon(1e-12));
  Parameter<double> bad{"w", {4, 3, 1, 1}, std::vector<double>(12)};
  CHECK_THROWS_AS(conv3x3(in, bad, b, true), ShapeError);
}

TEST_CASE("full forward matches the naive network") {
  for (int depth : {1, 2, 3}) {
    const UNetSpec spec{1, 3, depth, 1};
    const auto w = parameters_cast<double>(init_weights(spec, std::uint64_t(depth)));
    std::mt19937_64 gen(9);
    std::uniform_real_distribution<double> u(-1, 1);
    Tensor4<double> x({2, 1, 16, 8});
    for (auto& v : x.storage()) v = u(gen);
    const auto got = unet_forward(spec, w, x);
    const auto want = Naive::forward(spec, w, x);
    REQUIRE(got.shape() == want.shape());
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(got.data()[i] == doctest::Approx(want.data()[i]).epsilon(1e-10));
  }
}

TEST_CASE("shape contracts") {
  const UNetSpec spec{1, 2, 1, 1};
  CHECK(unet_layout(spec).size() == 2 * (4 * 1 + 3));
  const auto y = unet_forward(spec, init_weights(spec, 1), Tensor4<float>({1, 1, 8, 8}));
  CHECK(y.shape() == Tensor4<float>::Shape{1, 1, 8, 8});
  CHECK_THROWS_AS(unet_forward(spec, init_weights(spec, 1), Tensor4<float>({1, 1, 7, 8})), ShapeError);
  CHECK_THROWS_AS(unet_forward(spec, init_weights(UNetSpec{1, 4, 1, 1}, 1), Tensor4<float>({1, 1, 8, 8})),
                  ShapeError);
  CHECK_THROWS(UNetSpec{1, 0, 1, 1}.validate());
}

TEST_CASE("zero weights give exactly one half") {
  const UNetSpec spec{1, 4, 2, 1};
  Tensor4<float> x({2, 1, 8, 8});
  for (std::size_t i = 0; i < x.size(); ++i) x.storage()[i] = float(i) * 0.37f - 3.0f;
  const auto y = unet_forward(spec, zero_weights(spec), x);
  for (float v : y.data()) CHECK(v == 0.5f);
}

TEST_CASE("dice loss closed forms") {
  Tensor4<double> y({1, 1, 10, 10}, std::vector<double>(100, 1.0));
  CHECK(dice_loss(y, y) == doctest::Approx(0.0));
  const std::size_t n = 100000;
  Tensor4<double> half({1, 1, 1, n}, std::vector<double>(n, 0.5)), ones({1, 1, 1, n}, std::vector<double>(n, 1.0));
  CHECK(dice_loss(half, ones) == doctest::Approx(1.0 - (n + 1.0) / (1.5 * n + 1.0)));
  CHECK(dice_loss(half, ones) == doctest::Approx(1.0 / 3.0).epsilon(1e-4));
  Tensor4<double> a({1, 1, 1, 4}, {1, 1, 0, 0}), b({1, 1, 1, 4}, {0, 0, 1, 1});
  CHECK(dice_loss(a, b) == doctest::Approx(1.0 - 1.0 / 5.0));
}

TEST_CASE("dice gradient special values") {
  Tensor4<double> z({1, 1, 2, 2});
  const auto gz = dice_loss_grad(z, z);
  for (double g : gz.data()) CHECK(g == 1.0);
  Tensor4<double> p({1, 1, 1, 2}, {0.3, 0.6}), y({1, 1, 1, 2}, {1, 0});
  CHECK(dice_loss_grad(p, y).data()[0] < 0.0);
  for (std::uint64_t s = 0; s < 5; ++s) CHECK(testing::check_dice_gradient(s) < 1e-5);
}

TEST_CASE("backprop matches finite differences in double") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto r = testing::check_unet_gradients(UNetSpec{1, 2, 1, 1}, seed, 1, 8);
    INFO(r.worst_name);
    CHECK(r.worst_rel < 1e-5);
  }
  const auto deep = testing::check_unet_gradients(UNetSpec{1, 2, 2, 1}, 7, 2, 8);
  INFO(deep.worst_name);
  CHECK(deep.worst_rel < 1e-5);
}

TEST_CASE("backprop in float is close") {
  const UNetSpec spec{1, 2, 1, 1};
  const auto w32 = init_weights(spec, 3);
  Tensor4<float> x({1, 1, 8, 8});
  std::mt19937_64 gen(3);
  for (auto& v : x.storage()) v = float(gen() % 1000) / 500.0f - 1.0f;
  Tensor4<float> y({1, 1, 8, 8});
  for (auto& v : y.storage()) v = float(gen() % 2);
  ForwardCache<float> c32;
  const auto p32 = unet_forward(spec, w32, x, &c32);
  const auto g32 = unet_backward(spec, w32, c32, dice_loss_grad(p32, y));
  const auto w64 = parameters_cast<double>(w32);
  ForwardCache<double> c64;
  const auto p64 = unet_forward(spec, w64, tensor_cast<double>(x), &c64);
  const auto g64 = unet_backward(spec, w64, c64, dice_loss_grad(p64, tensor_cast<double>(y)));
  for (std::size_t k = 0; k < g32.params.size(); ++k) {
    double num = 0, den = 0;
    for (std::size_t i = 0; i < g32.params[k].data.size(); ++i) {
      const double d = g32.params[k].data[i] - g64.params[k].data[i];
      num += d * d;
      den += g64.params[k].data[i] * g64.params[k].data[i];
    }
    CHECK(std::sqrt(num) <= 1e-3 * std::sqrt(den) + 1e-9);
  }
}

TEST_CASE("backward is linear in the output gradient") {
  const UNetSpec spec{1, 2, 2, 1};
  const auto w = parameters_cast<double>(init_weights(spec, 4));
  Tensor4<double> x({1, 1, 8, 8});
  for (std::size_t i = 0; i < x.size(); ++i) x.storage()[i] = std::sin(double(i));
  ForwardCache<double> cache;
  const auto out = unet_forward(spec, w, x, &cache);
  for (const auto& p : unet_backward(spec, w, cache, Tensor4<double>(out.shape())).params)
    for (double v : p.data) CHECK(v == 0.0);

  Tensor4<double> g(out.shape());
  for (std::size_t i = 0; i < g.size(); ++i) g.storage()[i] = std::cos(double(i));
  const auto single = unet_backward(spec, w, cache, g);

  Tensor4<double> x2({2, 1, 8, 8}), g2({2, 1, 8, 8});
  for (std::size_t i = 0; i < x.size(); ++i) {
    x2.storage()[i] = x2.storage()[i + x.size()] = x.storage()[i];
    g2.storage()[i] = g2.storage()[i + x.size()] = g.storage()[i];
  }
  ForwardCache<double> cache2;
  unet_forward(spec, w, x2, &cache2);
  const auto twice = unet_backward(spec, w, cache2, g2);
  for (std::size_t k = 0; k < single.params.size(); ++k)
    for (std::size_t i = 0; i < single.params[k].data.size(); ++i)
      CHECK(twice.params[k].data[i] == doctest::Approx(2 * single.params[k].data[i]).epsilon(1e-12));
}

TEST_CASE("stale caches are rejected") {
  const UNetSpec spec{1, 2, 1, 1};
  auto w = parameters_cast<double>(init_weights(spec, 1));
  ForwardCache<double> cache;
  const auto out = unet_forward(spec, w, Tensor4<double>({1, 1, 4, 4}), &cache);
  w.params[0].data[0] += 1.0;
  CHECK_THROWS_AS(unet_backward(spec, w, cache, Tensor4<double>(out.shape())), Error);
  CHECK_THROWS_AS(unet_backward(spec, w, ForwardCache<double>{}, Tensor4<double>(out.shape())), Error);
}

namespace {

std::vector<TrainingPair> phantom_slices(std::size_t n) {
  PhantomSpec spec;
  spec.dims = {32, 32, 32};
  spec.spacing = {6, 6, 6};
  spec.noise_sigma = 0.2f;
  spec.semi_axes_mm = {{{40, 50}, {40, 50}, {30, 36}}};
  spec.center_jitter = {1, 1, 1};
  spec.seed = 17;
  const auto ph = generate_phantom(spec);
  const auto img = extract_slices(ph.image, Plane::axial);
  const auto lab = extract_slices(ph.mask, Plane::axial);
  std::vector<TrainingPair> out;
  for (std::size_t z = 11; out.size() < n; ++z) out.push_back({img[z], lab[z]});
  return out;
}

}  // namespace

TEST_CASE("training drives the Dice loss down on phantom slices") {
  const auto data = phantom_slices(10);
  TrainHyper h;
  h.lr = 0.05;
  h.momentum = 0.9;
  h.epochs = 30;
  h.batch = 2;
  h.seed = 3;
  const auto r = fit(UNetSpec{1, 8, 2, 1}, data, h);
  REQUIRE(r.loss_trace.size() == 30);
  CHECK(r.loss_trace.back() < 0.2);
}

TEST_CASE("training contracts") {
  const auto data = phantom_slices(4);
  const UNetSpec spec{1, 4, 2, 1};
  TrainHyper h;
  h.epochs = 3;
  h.lr = 0.0;
  const auto frozen = fit(spec, data, h);
  CHECK(frozen.weights == init_weights(spec, h.seed));
  CHECK(frozen.loss_trace[0] == frozen.loss_trace[2]);

  h.lr = 0.1;
  h.momentum = 0.5;
  CHECK(fit(spec, data, h).weights == fit(spec, data, h).weights);
  CHECK_THROWS_WITH(fit(spec, {}, h), doctest::Contains("no training pairs"));

  h.lr = 1e30;
  CHECK_THROWS_AS(fit(spec, data, h), DivergenceError);
  h.lr = 0.1;
  h.clip_norm = -1.0;
  CHECK_THROWS(fit(spec, data, h));
}

TEST_CASE("forward and backward are bit-identical across heap states") {
  const UNetSpec spec{1, 8, 2, 1};
  const auto w = init_weights(spec, 1);
  Tensor4<float> x({4, 1, 32, 32}), y({4, 1, 32, 32});
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (auto& v : x.data()) v = u(rng);
  for (auto& v : y.data()) v = rng() % 5 == 0 ? 1.0f : 0.0f;
  auto run = [&] {
    ForwardCache<float> cache;
    const auto p = unet_forward(spec, w, x, &cache);
    const auto g = unet_backward(spec, w, cache, dice_loss_grad(p, y));
    std::vector<float> out(p.data().begin(), p.data().end());
    for (const auto& q : g.params) out.insert(out.end(), q.data.begin(), q.data.end());
    return out;
  };
  const auto ref = run();
  std::vector<std::unique_ptr<char[]>> shift;
  for (int k = 1; k <= 8; ++k) {
    shift.emplace_back(new char[std::size_t(4 * k + 4)]);
    const auto again = run();
    REQUIRE(again.size() == ref.size());
    CHECK(std::memcmp(again.data(), ref.data(), ref.size() * sizeof(float)) == 0);
  }
}

TEST_CASE("gradient clipping bounds a single step") {
  const auto data = phantom_slices(2);
  const UNetSpec spec{1, 4, 2, 1};
  TrainHyper h;
  h.epochs = 1;
  h.batch = 2;
  h.lr = 0.5;
  const auto w0 = init_weights(spec, h.seed);
  auto step_norm = [&](const ModelWeights& w1) {
    double sq = 0.0;
    for (std::size_t k = 0; k < w0.params.size(); ++k) {
      for (std::size_t i = 0; i < w0.params[k].data.size(); ++i) {
        const double d = double(w1.params[k].data[i]) - double(w0.params[k].data[i]);
        sq += d * d;
      }
    }
    return std::sqrt(sq);
  };
  const double free_step = step_norm(fit(spec, data, h).weights);
  REQUIRE(free_step > 0.01);
  h.clip_norm = 0.01 / h.lr;
  CHECK(step_norm(fit(spec, data, h).weights) == doctest::Approx(0.01).epsilon(1e-3));
  h.clip_norm = 10.0 * free_step / h.lr;
  CHECK(fit(spec, data, h).weights == fit(spec, data, TrainHyper{h.lr, 0.0, 1, 2, h.seed, 0, 0.0}).weights);
}

TEST_CASE("threshold and unet models") {
  Slice2D s({1, 2}, {1, 1}, {0.2f, 0.9f});
  const auto p = threshold_model(0.5f)->predict(s);
  CHECK(p.at(0, 0) == 0.0f);
  CHECK(p.at(0, 1) == 1.0f);
  const auto all = threshold_model(-5.0f)->predict(s);
  for (float v : all.data()) CHECK(v == 1.0f);

  const UNetSpec spec{1, 2, 1, 1};
  const UNetModel m(spec, zero_weights(spec));
  const auto q = m.predict(Slice2D({4, 6}, {1, 1}));
  CHECK(q.dims() == Dims2{4, 6});
  for (float v : q.data()) CHECK(v == 0.5f);
  CHECK_THROWS(UNetModel(UNetSpec{1, 3, 1, 1}, zero_weights(spec)));
}
