#pragma once

// Soft Dice loss over a whole batch:
//   L = 1 - (2 * sum(p * y) + eps) / (sum(p) + sum(y) + eps)
// with eps = 1 by default, so empty labels are well defined.

#include "c2f/tensor.hpp"

namespace c2f {

inline constexpr double kDiceSmoothing = 1.0;

template <typename T>
T dice_loss(const Tensor4<T>& p, const Tensor4<T>& y, T eps = T(kDiceSmoothing));

/// dL/dp_i = ((2I + eps) - 2 y_i (S + eps)) / (S + eps)^2,
/// where I = sum(p * y) and S = sum(p) + sum(y).
template <typename T>
Tensor4<T> dice_loss_grad(const Tensor4<T>& p, const Tensor4<T>& y, T eps = T(kDiceSmoothing));

}  // namespace c2f
