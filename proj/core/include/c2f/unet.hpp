#pragma once

// A small 2D U-Net with hand-written forward and backward passes.
//
// Topology for depth L and base width B (channels double per level):
//   enc{l}:  conv3x3 -> ReLU -> conv3x3 -> ReLU   (width B*2^l), then 2x2 max-pool
//   bott:    conv3x3 -> ReLU -> conv3x3 -> ReLU   (width B*2^L)
//   dec{l}:  2x nearest upsample, concat [skip_l, upsampled],
//            conv3x3 -> ReLU -> conv3x3 -> ReLU   (width B*2^l)
//   head:    conv1x1 -> sigmoid
// All 3x3 convolutions use zero "same" padding. Templated on the scalar so the
// same code runs in float for training and double for gradient checks.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "c2f/tensor.hpp"

namespace c2f {

struct UNetSpec {
  int in_channels = 1;
  int base_channels = 8;
  int depth = 3;
  int out_channels = 1;

  void validate() const;
  /// Input rows and cols must be multiples of this.
  std::size_t divisor() const noexcept { return std::size_t{1} << depth; }
  bool operator==(const UNetSpec&) const = default;
};

template <typename T>
struct Parameter {
  std::string name;
  std::vector<std::uint32_t> shape;
  std::vector<T> data;

  bool operator==(const Parameter&) const = default;
};

template <typename T>
struct ParameterSet {
  std::vector<Parameter<T>> params;

  const Parameter<T>* find(const std::string& name) const;
  std::size_t scalar_count() const noexcept;
  bool operator==(const ParameterSet&) const = default;
};

using ModelWeights = ParameterSet<float>;

struct ParameterShape {
  std::string name;
  std::vector<std::uint32_t> shape;
  std::size_t fan_in;
};

/// Names and shapes of every parameter, in storage order.
std::vector<ParameterShape> unet_layout(const UNetSpec& spec);

/// He-uniform: [-a, a] with a = sqrt(6 / fan_in), from a seeded generator.
ModelWeights init_weights(const UNetSpec& spec, std::uint64_t seed);
ModelWeights zero_weights(const UNetSpec& spec);

/// Throws ShapeError naming the first parameter that does not fit the spec.
template <typename T>
void check_weights(const UNetSpec& spec, const ParameterSet<T>& w);

template <typename To, typename From>
ParameterSet<To> parameters_cast(const ParameterSet<From>& w) {
  ParameterSet<To> out;
  out.params.reserve(w.params.size());
  for (const auto& p : w.params) {
    std::vector<To> data(p.data.begin(), p.data.end());
    out.params.push_back({p.name, p.shape, std::move(data)});
  }
  return out;
}

/// Activations recorded by a forward pass for use by backward.
template <typename T>
struct ForwardCache {
  UNetSpec spec;
  std::uint64_t weights_fingerprint = 0;
  Tensor4<T> input;
  /// Post-ReLU outputs of every 3x3 conv, in execution order.
  std::vector<Tensor4<T>> conv_out;
  /// Pooled tensors fed to the next encoder level (or the bottleneck).
  std::vector<Tensor4<T>> pooled;
  /// Argmax (0..3) inside each 2x2 pooling window, one vector per level.
  std::vector<std::vector<std::uint8_t>> pool_argmax;
  /// Concatenated decoder inputs, one per decoder level (execution order).
  std::vector<Tensor4<T>> concat;
  Tensor4<T> output;
  bool valid = false;
};

template <typename T>
Tensor4<T> unet_forward(const UNetSpec& spec, const ParameterSet<T>& weights,
                        const Tensor4<T>& input, ForwardCache<T>* cache = nullptr);

/// grad_output is dLoss/dProbabilities with the forward output's shape.
template <typename T>
ParameterSet<T> unet_backward(const UNetSpec& spec, const ParameterSet<T>& weights,
                              const ForwardCache<T>& cache, const Tensor4<T>& grad_output);

/// One 3x3 zero-padded convolution, optionally followed by ReLU.
/// weight is (out, in, 3, 3), bias is (out).
template <typename T>
Tensor4<T> conv3x3(const Tensor4<T>& input, const Parameter<T>& weight, const Parameter<T>& bias,
                   bool relu);

template <typename T>
std::uint64_t fingerprint(const ParameterSet<T>& w);

}  // namespace c2f
