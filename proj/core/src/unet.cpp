#include "c2f/unet.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>
#include <sstream>

#include "c2f/error.hpp"
#include "fp_env.hpp"
#include "rng.hpp"

namespace c2f {

void UNetSpec::validate() const {
  if (in_channels < 1 || out_channels < 1 || base_channels < 1) {
    throw ShapeError("UNetSpec: channel counts must be positive");
  }
  if (depth < 1 || depth > 8) throw ShapeError("UNetSpec: depth must be in [1, 8]");
}

template <typename T>
const Parameter<T>* ParameterSet<T>::find(const std::string& name) const {
  for (const auto& p : params)
    if (p.name == name) return &p;
  return nullptr;
}

template <typename T>
std::size_t ParameterSet<T>::scalar_count() const noexcept {
  std::size_t n = 0;
  for (const auto& p : params) n += p.data.size();
  return n;
}

template struct ParameterSet<float>;
template struct ParameterSet<double>;

namespace {

std::uint32_t level_width(const UNetSpec& s, int level) {
  return std::uint32_t(s.base_channels) << level;
}

void add_conv(std::vector<ParameterShape>& out, const std::string& prefix, std::uint32_t in,
              std::uint32_t o, std::uint32_t k) {
  const std::size_t fan_in = std::size_t(in) * k * k;
  out.push_back({prefix + ".weight", {o, in, k, k}, fan_in});
  out.push_back({prefix + ".bias", {o}, fan_in});
}

}  // namespace

std::vector<ParameterShape> unet_layout(const UNetSpec& spec) {
  spec.validate();
  std::vector<ParameterShape> out;
  const int L = spec.depth;
  std::uint32_t in = std::uint32_t(spec.in_channels);
  for (int l = 0; l < L; ++l) {
    const std::uint32_t w = level_width(spec, l);
    const std::string p = "enc" + std::to_string(l);
    add_conv(out, p + ".conv1", in, w, 3);
    add_conv(out, p + ".conv2", w, w, 3);
    in = w;
  }
  const std::uint32_t bw = level_width(spec, L);
  add_conv(out, "bott.conv1", in, bw, 3);
  add_conv(out, "bott.conv2", bw, bw, 3);
  std::uint32_t below = bw;
  for (int l = L - 1; l >= 0; --l) {
    const std::uint32_t w = level_width(spec, l);
    const std::string p = "dec" + std::to_string(l);
    add_conv(out, p + ".conv1", w + below, w, 3);
    add_conv(out, p + ".conv2", w, w, 3);
    below = w;
  }
  add_conv(out, "head", level_width(spec, 0), std::uint32_t(spec.out_channels), 1);
  return out;
}

ModelWeights init_weights(const UNetSpec& spec, std::uint64_t seed) {
  SplitMix64 rng(seed);
  ModelWeights w;
  for (const auto& ps : unet_layout(spec)) {
    std::size_t n = 1;
    for (auto d : ps.shape) n *= d;
    const double a = std::sqrt(6.0 / double(ps.fan_in));
    std::vector<float> data(n);
    for (auto& v : data) v = static_cast<float>((2.0 * rng.uniform() - 1.0) * a);
    w.params.push_back({ps.name, ps.shape, std::move(data)});
  }
  return w;
}

ModelWeights zero_weights(const UNetSpec& spec) {
  ModelWeights w;
  for (const auto& ps : unet_layout(spec)) {
    std::size_t n = 1;
    for (auto d : ps.shape) n *= d;
    w.params.push_back({ps.name, ps.shape, std::vector<float>(n, 0.0f)});
  }
  return w;
}

template <typename T>
void check_weights(const UNetSpec& spec, const ParameterSet<T>& w) {
  const auto layout = unet_layout(spec);
  if (w.params.size() != layout.size()) {
    std::ostringstream os;
    os << "weights hold " << w.params.size() << " parameters, spec needs " << layout.size();
    throw ShapeError(os.str());
  }
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const auto& p = w.params[i];
    if (p.name != layout[i].name || p.shape != layout[i].shape) {
      std::ostringstream os;
      os << "parameter " << i << " ('" << p.name << "') does not match layer '" << layout[i].name
         << "'";
      throw ShapeError(os.str());
    }
    std::size_t n = 1;
    for (auto d : p.shape) n *= d;
    if (p.data.size() != n) throw ShapeError("parameter '" + p.name + "' data length mismatch");
  }
}

template <typename T>
std::uint64_t fingerprint(const ParameterSet<T>& w) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& p : w.params) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(p.data.data());
    for (std::size_t i = 0; i < p.data.size() * sizeof(T); ++i) {
      h ^= bytes[i];
      h *= 1099511628211ULL;
    }
  }
  return h;
}

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

// cols is (C*9) x (H*W): row c*9 + ky*3 + kx holds in[c, y+ky-1, x+kx-1].
template <typename T>
void im2col3(const T* in, std::size_t C, std::size_t H, std::size_t W, T* cols) {
  const std::size_t hw = H * W;
  for (std::size_t c = 0; c < C; ++c) {
    const T* src = in + c * hw;
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        T* dst = cols + (c * 9 + std::size_t(ky * 3 + kx)) * hw;
        const long dy = ky - 1, dx = kx - 1;
        for (long y = 0; y < long(H); ++y) {
          T* row = dst + std::size_t(y) * W;
          const long sy = y + dy;
          if (sy < 0 || sy >= long(H)) {
            std::fill(row, row + W, T(0));
            continue;
          }
          const T* srow = src + std::size_t(sy) * W;
          const long x0 = std::max(0L, -dx);
          const long x1 = std::min(long(W), long(W) - dx);
          for (long x = 0; x < x0; ++x) row[x] = T(0);
          std::memcpy(row + x0, srow + x0 + dx, std::size_t(x1 - x0) * sizeof(T));
          for (long x = x1; x < long(W); ++x) row[x] = T(0);
        }
      }
    }
  }
}

template <typename T>
void col2im3_add(const T* cols, std::size_t C, std::size_t H, std::size_t W, T* out) {
  const std::size_t hw = H * W;
  for (std::size_t c = 0; c < C; ++c) {
    T* dst = out + c * hw;
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const T* src = cols + (c * 9 + std::size_t(ky * 3 + kx)) * hw;
        const long dy = ky - 1, dx = kx - 1;
        for (long y = 0; y < long(H); ++y) {
          const long sy = y + dy;
          if (sy < 0 || sy >= long(H)) continue;
          const T* row = src + std::size_t(y) * W;
          T* drow = dst + std::size_t(sy) * W;
          const long x0 = std::max(0L, -dx);
          const long x1 = std::min(long(W), long(W) - dx);
          for (long x = x0; x < x1; ++x) drow[x + dx] += row[x];
        }
      }
    }
  }
}

template <typename T>
struct ConvParams {
  const Parameter<T>& weight;
  const Parameter<T>& bias;
  std::size_t out_ch() const { return weight.shape[0]; }
  std::size_t in_ch() const { return weight.shape[1]; }
  std::size_t k() const { return weight.shape[2]; }
};

template <typename T>
ConvParams<T> conv_at(const ParameterSet<T>& w, std::size_t layer) {
  return {w.params[2 * layer], w.params[2 * layer + 1]};
}

template <typename T>
void require_channels(const ConvParams<T>& p, const Tensor4<T>& in) {
  if (in.channels() != p.in_ch()) {
    std::ostringstream os;
    os << "layer '" << p.weight.name << "' expects " << p.in_ch() << " input channels, got "
       << in.channels();
    throw ShapeError(os.str());
  }
}

// acc[o] += sum_i g[o * hw + i], in index order regardless of alignment.
template <typename T>
void add_row_sums(const T* g, std::size_t rows, std::size_t hw, T* acc) {
  for (std::size_t o = 0; o < rows; ++o) {
    T s = T(0);
    for (std::size_t i = 0; i < hw; ++i) s += g[o * hw + i];
    acc[o] += s;
  }
}

// 3x3 same-padding convolution followed by ReLU.
template <typename T>
Tensor4<T> conv3_relu(const Tensor4<T>& in, const ConvParams<T>& p, std::vector<T>& scratch,
                      bool relu = true) {
  require_channels(p, in);
  const std::size_t N = in.batch(), C = in.channels(), H = in.rows(), W = in.cols(), O = p.out_ch();
  const std::size_t hw = H * W;
  Tensor4<T> out({N, O, H, W});
  scratch.resize(C * 9 * hw);
  ConstMatMap<T> wm(p.weight.data.data(), Eigen::Index(O), Eigen::Index(C * 9));
  Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> bias(p.bias.data.data(), Eigen::Index(O));
  for (std::size_t n = 0; n < N; ++n) {
    im2col3(in.sample(n), C, H, W, scratch.data());
    ConstMatMap<T> cols(scratch.data(), Eigen::Index(C * 9), Eigen::Index(hw));
    MatMap<T> om(out.sample(n), Eigen::Index(O), Eigen::Index(hw));
    om.noalias() = wm * cols;
    om.colwise() += bias;
    if (relu) om = om.cwiseMax(T(0));
  }
  return out;
}

// Backward through ReLU(conv3x3(in)). grad is dL/d(out), consumed in place.
// Accumulates parameter grads; returns dL/d(in) unless need_input_grad is false.
template <typename T>
Tensor4<T> conv3_relu_backward(const Tensor4<T>& in, const Tensor4<T>& out, Tensor4<T>& grad,
                               const ConvParams<T>& p, Parameter<T>& gw, Parameter<T>& gb,
                               bool need_input_grad, std::vector<T>& scratch) {
  const std::size_t N = in.batch(), C = in.channels(), H = in.rows(), W = in.cols(), O = p.out_ch();
  const std::size_t hw = H * W;
  auto g = grad.data();
  const auto o = out.data();
  for (std::size_t i = 0; i < g.size(); ++i)
    if (!(o[i] > T(0))) g[i] = T(0);

  Tensor4<T> din;
  if (need_input_grad) din = Tensor4<T>({N, C, H, W});
  scratch.resize(2 * C * 9 * hw);
  T* cols_buf = scratch.data();
  T* dcols_buf = scratch.data() + C * 9 * hw;
  ConstMatMap<T> wm(p.weight.data.data(), Eigen::Index(O), Eigen::Index(C * 9));
  MatMap<T> gwm(gw.data.data(), Eigen::Index(O), Eigen::Index(C * 9));
  for (std::size_t n = 0; n < N; ++n) {
    im2col3(in.sample(n), C, H, W, cols_buf);
    ConstMatMap<T> cols(cols_buf, Eigen::Index(C * 9), Eigen::Index(hw));
    ConstMatMap<T> gm(grad.sample(n), Eigen::Index(O), Eigen::Index(hw));
    gwm.noalias() += gm * cols.transpose();
    add_row_sums(grad.sample(n), O, hw, gb.data.data());
    if (need_input_grad) {
      MatMap<T> dcols(dcols_buf, Eigen::Index(C * 9), Eigen::Index(hw));
      dcols.noalias() = wm.transpose() * gm;
      col2im3_add(dcols_buf, C, H, W, din.sample(n));
    }
  }
  return din;
}

template <typename T>
Tensor4<T> maxpool2(const Tensor4<T>& in, std::vector<std::uint8_t>& argmax) {
  const std::size_t N = in.batch(), C = in.channels(), H = in.rows() / 2, W = in.cols() / 2;
  Tensor4<T> out({N, C, H, W});
  argmax.assign(out.size(), 0);
  const std::size_t iw = in.cols();
  std::size_t k = 0;
  for (std::size_t nc = 0; nc < N * C; ++nc) {
    const T* src = in.data().data() + nc * in.plane();
    T* dst = out.data().data() + nc * out.plane();
    for (std::size_t y = 0; y < H; ++y) {
      for (std::size_t x = 0; x < W; ++x, ++k) {
        const T* p = src + 2 * y * iw + 2 * x;
        const T v[4] = {p[0], p[1], p[iw], p[iw + 1]};
        std::uint8_t best = 0;
        for (std::uint8_t j = 1; j < 4; ++j)
          if (v[j] > v[best]) best = j;
        dst[y * W + x] = v[best];
        argmax[k] = best;
      }
    }
  }
  return out;
}

template <typename T>
void maxpool2_backward_add(const Tensor4<T>& grad, const std::vector<std::uint8_t>& argmax,
                           Tensor4<T>& din) {
  const std::size_t H = grad.rows(), W = grad.cols(), iw = din.cols();
  std::size_t k = 0;
  for (std::size_t nc = 0; nc < grad.batch() * grad.channels(); ++nc) {
    const T* g = grad.data().data() + nc * grad.plane();
    T* dst = din.data().data() + nc * din.plane();
    for (std::size_t y = 0; y < H; ++y) {
      for (std::size_t x = 0; x < W; ++x, ++k) {
        const std::uint8_t a = argmax[k];
        dst[(2 * y + (a >> 1)) * iw + 2 * x + (a & 1)] += g[y * W + x];
      }
    }
  }
}

// Concatenates [skip, upsample2x(low)] along channels.
template <typename T>
Tensor4<T> upsample_concat(const Tensor4<T>& skip, const Tensor4<T>& low) {
  const std::size_t N = skip.batch(), Cs = skip.channels(), Cl = low.channels();
  const std::size_t H = skip.rows(), W = skip.cols();
  if (low.rows() * 2 != H || low.cols() * 2 != W || low.batch() != N) {
    throw ShapeError("decoder: upsampled " + shape_string(low.shape()) + " does not fit skip " +
                     shape_string(skip.shape()));
  }
  Tensor4<T> out({N, Cs + Cl, H, W});
  const std::size_t hw = H * W;
  for (std::size_t n = 0; n < N; ++n) {
    T* dst = out.sample(n);
    std::copy(skip.sample(n), skip.sample(n) + Cs * hw, dst);
    for (std::size_t c = 0; c < Cl; ++c) {
      const T* src = low.sample(n) + c * low.plane();
      T* d = dst + (Cs + c) * hw;
      for (std::size_t y = 0; y < H; ++y)
        for (std::size_t x = 0; x < W; ++x) d[y * W + x] = src[(y / 2) * low.cols() + x / 2];
    }
  }
  return out;
}

// Splits dL/d(concat) into the skip part (added to dskip) and dL/d(low).
template <typename T>
Tensor4<T> upsample_concat_backward(const Tensor4<T>& grad, std::size_t skip_channels,
                                    Tensor4<T>& dskip, const typename Tensor4<T>::Shape& low_shape) {
  const std::size_t N = grad.batch(), H = grad.rows(), W = grad.cols(), hw = H * W;
  Tensor4<T> dlow(low_shape);
  const std::size_t Cl = low_shape[1], lw = low_shape[3];
  for (std::size_t n = 0; n < N; ++n) {
    const T* g = grad.sample(n);
    T* ds = dskip.sample(n);
    for (std::size_t i = 0; i < skip_channels * hw; ++i) ds[i] += g[i];
    for (std::size_t c = 0; c < Cl; ++c) {
      const T* src = g + (skip_channels + c) * hw;
      T* d = dlow.sample(n) + c * dlow.plane();
      for (std::size_t y = 0; y < H; ++y)
        for (std::size_t x = 0; x < W; ++x) d[(y / 2) * lw + x / 2] += src[y * W + x];
    }
  }
  return dlow;
}

template <typename T>
T sigmoid(T z) {
  return T(1) / (T(1) + std::exp(-z));
}

template <typename T>
Tensor4<T> head_sigmoid(const Tensor4<T>& in, const ConvParams<T>& p) {
  require_channels(p, in);
  const std::size_t N = in.batch(), C = in.channels(), O = p.out_ch(), hw = in.plane();
  Tensor4<T> out({N, O, in.rows(), in.cols()});
  // Plain loops keep the 1x1 head independent of buffer alignment.
  const T* w = p.weight.data.data();
  for (std::size_t n = 0; n < N; ++n) {
    const T* x = in.sample(n);
    T* z = out.sample(n);
    for (std::size_t o = 0; o < O; ++o) {
      T* zo = z + o * hw;
      std::fill(zo, zo + hw, p.bias.data[o]);
      for (std::size_t c = 0; c < C; ++c) {
        const T wc = w[o * C + c];
        const T* xc = x + c * hw;
        for (std::size_t i = 0; i < hw; ++i) zo[i] += wc * xc[i];
      }
    }
  }
  for (auto& v : out.data()) v = sigmoid(v);
  return out;
}

// Convolutions including the 1x1 head.
std::size_t layer_count(const UNetSpec& s) { return std::size_t(4 * s.depth + 3); }

}  // namespace

template <typename T>
Tensor4<T> unet_forward(const UNetSpec& spec, const ParameterSet<T>& weights,
                        const Tensor4<T>& input, ForwardCache<T>* cache) {
  const detail::DenormalGuard ftz;
  check_weights(spec, weights);
  const std::size_t div = spec.divisor();
  if (input.channels() != std::size_t(spec.in_channels)) {
    throw ShapeError("layer 'enc0.conv1': input has " + std::to_string(input.channels()) +
                     " channels, spec expects " + std::to_string(spec.in_channels));
  }
  if (input.rows() == 0 || input.cols() == 0 || input.rows() % div || input.cols() % div) {
    throw ShapeError("layer 'enc0.conv1': input " + shape_string(input.shape()) +
                     " rows/cols must be positive multiples of " + std::to_string(div));
  }

  const int L = spec.depth;
  std::vector<T> scratch;
  std::vector<Tensor4<T>> conv_out;
  std::vector<Tensor4<T>> pooled;
  std::vector<std::vector<std::uint8_t>> argmax(static_cast<std::size_t>(L));
  std::vector<Tensor4<T>> concat;
  conv_out.reserve(layer_count(spec));

  const Tensor4<T>* x = &input;
  std::size_t layer = 0;
  for (int l = 0; l < L; ++l) {
    conv_out.push_back(conv3_relu(*x, conv_at(weights, layer++), scratch));
    conv_out.push_back(conv3_relu(conv_out.back(), conv_at(weights, layer++), scratch));
    pooled.push_back(maxpool2(conv_out.back(), argmax[std::size_t(l)]));
    x = &pooled.back();
  }
  conv_out.push_back(conv3_relu(*x, conv_at(weights, layer++), scratch));
  conv_out.push_back(conv3_relu(conv_out.back(), conv_at(weights, layer++), scratch));
  for (int l = L - 1; l >= 0; --l) {
    const Tensor4<T>& skip = conv_out[std::size_t(2 * l + 1)];
    concat.push_back(upsample_concat(skip, conv_out.back()));
    conv_out.push_back(conv3_relu(concat.back(), conv_at(weights, layer++), scratch));
    conv_out.push_back(conv3_relu(conv_out.back(), conv_at(weights, layer++), scratch));
  }
  Tensor4<T> out = head_sigmoid(conv_out.back(), conv_at(weights, layer));

  if (cache) {
    cache->spec = spec;
    cache->weights_fingerprint = fingerprint(weights);
    cache->input = input;
    cache->conv_out = std::move(conv_out);
    cache->pooled = std::move(pooled);
    cache->pool_argmax = std::move(argmax);
    cache->concat = std::move(concat);
    cache->output = out;
    cache->valid = true;
  }
  return out;
}

template <typename T>
ParameterSet<T> unet_backward(const UNetSpec& spec, const ParameterSet<T>& weights,
                              const ForwardCache<T>& cache, const Tensor4<T>& grad_output) {
  const detail::DenormalGuard ftz;
  if (!cache.valid) throw ShapeError("backward: forward cache is empty");
  if (!(cache.spec == spec)) throw ShapeError("backward: cache was recorded for a different spec");
  check_weights(spec, weights);
  if (cache.weights_fingerprint != fingerprint(weights)) {
    throw ShapeError("backward: weights changed since the forward pass (stale cache)");
  }
  if (grad_output.shape() != cache.output.shape()) {
    throw ShapeError("backward: grad_output " + shape_string(grad_output.shape()) +
                     " does not match forward output " + shape_string(cache.output.shape()));
  }
  if (cache.conv_out.size() != layer_count(spec) - 1) {
    throw ShapeError("backward: cache does not match the network depth");
  }

  ParameterSet<T> grads;
  for (const auto& p : weights.params)
    grads.params.push_back({p.name, p.shape, std::vector<T>(p.data.size(), T(0))});

  const int L = spec.depth;
  std::vector<T> scratch;
  auto conv_grad = [&](std::size_t layer) -> std::pair<Parameter<T>&, Parameter<T>&> {
    return {grads.params[2 * layer], grads.params[2 * layer + 1]};
  };

  // Head: dZ = dP * P(1 - P).
  const std::size_t head_layer = layer_count(spec) - 1;
  const ConvParams<T> head = conv_at(weights, head_layer);
  const Tensor4<T>& head_in = cache.conv_out.back();
  Tensor4<T> dz(grad_output.shape());
  {
    const auto p = cache.output.data();
    const auto g = grad_output.data();
    auto d = dz.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = g[i] * p[i] * (T(1) - p[i]);
  }
  Tensor4<T> dx(head_in.shape());
  {
    auto [gw, gb] = conv_grad(head_layer);
    const std::size_t C = head_in.channels(), O = head.out_ch(), hw = head_in.plane();
    const T* w = head.weight.data.data();
    for (std::size_t n = 0; n < head_in.batch(); ++n) {
      const T* x = head_in.sample(n);
      const T* g = dz.sample(n);
      T* d = dx.sample(n);
      add_row_sums(g, O, hw, gb.data.data());
      for (std::size_t o = 0; o < O; ++o) {
        const T* go = g + o * hw;
        for (std::size_t c = 0; c < C; ++c) {
          const T* xc = x + c * hw;
          T s = T(0);
          for (std::size_t i = 0; i < hw; ++i) s += go[i] * xc[i];
          gw.data[o * C + c] += s;
          const T wc = w[o * C + c];
          T* dc = d + c * hw;
          for (std::size_t i = 0; i < hw; ++i) dc[i] += wc * go[i];
        }
      }
    }
  }

  // Gradients w.r.t. the skip outputs (enc{l}.conv2), filled by the decoder.
  std::vector<Tensor4<T>> dskip;
  for (int l = 0; l < L; ++l) dskip.emplace_back(cache.conv_out[std::size_t(2 * l + 1)].shape());

  // Decoder, reverse execution order: dec0 first.
  std::size_t layer = head_layer;
  for (int l = 0; l < L; ++l) {
    const std::size_t e = std::size_t(L - 1 - l);  // execution index of this decoder level
    const std::size_t c1 = std::size_t(2 * L + 2) + 2 * e;
    const std::size_t c2 = c1 + 1;
    layer -= 2;
    {
      auto [gw, gb] = conv_grad(layer + 1);
      dx = conv3_relu_backward(cache.conv_out[c1], cache.conv_out[c2], dx, conv_at(weights, layer + 1),
                               gw, gb, true, scratch);
    }
    Tensor4<T> dcat;
    {
      auto [gw, gb] = conv_grad(layer);
      dcat = conv3_relu_backward(cache.concat[e], cache.conv_out[c1], dx, conv_at(weights, layer), gw,
                                 gb, true, scratch);
    }
    const std::size_t skip_ch = cache.conv_out[std::size_t(2 * l + 1)].channels();
    dx = upsample_concat_backward(dcat, skip_ch, dskip[std::size_t(l)],
                                  cache.conv_out[c1 - 1].shape());
  }

  // Bottleneck.
  const std::size_t b1 = std::size_t(2 * L), b2 = b1 + 1;
  layer -= 2;
  {
    auto [gw, gb] = conv_grad(layer + 1);
    dx = conv3_relu_backward(cache.conv_out[b1], cache.conv_out[b2], dx, conv_at(weights, layer + 1),
                             gw, gb, true, scratch);
  }
  {
    auto [gw, gb] = conv_grad(layer);
    dx = conv3_relu_backward(cache.pooled[std::size_t(L - 1)], cache.conv_out[b1], dx,
                             conv_at(weights, layer), gw, gb, true, scratch);
  }

  // Encoder, deepest level first.
  for (int l = L - 1; l >= 0; --l) {
    const std::size_t c1 = std::size_t(2 * l), c2 = c1 + 1;
    Tensor4<T>& d2 = dskip[std::size_t(l)];
    maxpool2_backward_add(dx, cache.pool_argmax[std::size_t(l)], d2);
    layer -= 2;
    {
      auto [gw, gb] = conv_grad(layer + 1);
      dx = conv3_relu_backward(cache.conv_out[c1], cache.conv_out[c2], d2, conv_at(weights, layer + 1),
                               gw, gb, true, scratch);
    }
    const Tensor4<T>& in = l == 0 ? cache.input : cache.pooled[std::size_t(l - 1)];
    auto [gw, gb] = conv_grad(layer);
    dx = conv3_relu_backward(in, cache.conv_out[c1], dx, conv_at(weights, layer), gw, gb, l != 0,
                             scratch);
  }
  return grads;
}

template void check_weights<float>(const UNetSpec&, const ParameterSet<float>&);
template void check_weights<double>(const UNetSpec&, const ParameterSet<double>&);
template std::uint64_t fingerprint<float>(const ParameterSet<float>&);
template std::uint64_t fingerprint<double>(const ParameterSet<double>&);
template <typename T>
Tensor4<T> conv3x3(const Tensor4<T>& input, const Parameter<T>& weight, const Parameter<T>& bias,
                   bool relu) {
  if (weight.shape.size() != 4 || weight.shape[2] != 3 || weight.shape[3] != 3 ||
      bias.shape != std::vector<std::uint32_t>{weight.shape[0]} ||
      weight.data.size() != std::size_t(weight.shape[0]) * weight.shape[1] * 9 ||
      bias.data.size() != weight.shape[0]) {
    throw ShapeError("conv3x3: weight must be (out, in, 3, 3) with a matching (out) bias");
  }
  const detail::DenormalGuard ftz;
  std::vector<T> scratch;
  return conv3_relu(input, ConvParams<T>{weight, bias}, scratch, relu);
}

template Tensor4<float> conv3x3<float>(const Tensor4<float>&, const Parameter<float>&,
                                       const Parameter<float>&, bool);
template Tensor4<double> conv3x3<double>(const Tensor4<double>&, const Parameter<double>&,
                                         const Parameter<double>&, bool);
template Tensor4<float> unet_forward<float>(const UNetSpec&, const ParameterSet<float>&,
                                            const Tensor4<float>&, ForwardCache<float>*);
template Tensor4<double> unet_forward<double>(const UNetSpec&, const ParameterSet<double>&,
                                              const Tensor4<double>&, ForwardCache<double>*);
template ParameterSet<float> unet_backward<float>(const UNetSpec&, const ParameterSet<float>&,
                                                  const ForwardCache<float>&, const Tensor4<float>&);
template ParameterSet<double> unet_backward<double>(const UNetSpec&, const ParameterSet<double>&,
                                                    const ForwardCache<double>&,
                                                    const Tensor4<double>&);

}  // namespace c2f
