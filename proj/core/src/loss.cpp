#include "c2f/loss.hpp"

#include "c2f/error.hpp"

namespace c2f {

namespace {

template <typename T>
void check_pair(const Tensor4<T>& p, const Tensor4<T>& y) {
  if (p.shape() != y.shape()) {
    throw ShapeError("dice: prediction " + shape_string(p.shape()) + " vs label " +
                     shape_string(y.shape()));
  }
}

template <typename T>
struct DiceSums {
  T intersection = 0;
  T total = 0;
};

// Accumulated in double regardless of T; float sums over 10^5 pixels drift.
template <typename T>
DiceSums<double> sums(const Tensor4<T>& p, const Tensor4<T>& y) {
  DiceSums<double> s;
  const auto pd = p.data();
  const auto yd = y.data();
  for (std::size_t i = 0; i < pd.size(); ++i) {
    s.intersection += double(pd[i]) * double(yd[i]);
    s.total += double(pd[i]) + double(yd[i]);
  }
  return s;
}

}  // namespace

template <typename T>
T dice_loss(const Tensor4<T>& p, const Tensor4<T>& y, T eps) {
  check_pair(p, y);
  const auto s = sums(p, y);
  const double e = double(eps);
  return T(1.0 - (2.0 * s.intersection + e) / (s.total + e));
}

template <typename T>
Tensor4<T> dice_loss_grad(const Tensor4<T>& p, const Tensor4<T>& y, T eps) {
  check_pair(p, y);
  const auto s = sums(p, y);
  const double e = double(eps);
  const double num = 2.0 * s.intersection + e;
  const double den = s.total + e;
  const double inv_den2 = 1.0 / (den * den);
  Tensor4<T> g(p.shape());
  auto gd = g.data();
  const auto yd = y.data();
  for (std::size_t i = 0; i < gd.size(); ++i) {
    gd[i] = T((num - 2.0 * double(yd[i]) * den) * inv_den2);
  }
  return g;
}

template float dice_loss<float>(const Tensor4<float>&, const Tensor4<float>&, float);
template double dice_loss<double>(const Tensor4<double>&, const Tensor4<double>&, double);
template Tensor4<float> dice_loss_grad<float>(const Tensor4<float>&, const Tensor4<float>&, float);
template Tensor4<double> dice_loss_grad<double>(const Tensor4<double>&, const Tensor4<double>&,
                                                double);

}  // namespace c2f
