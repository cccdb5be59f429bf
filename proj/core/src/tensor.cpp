#include "c2f/tensor.hpp"

#include <sstream>

#include "c2f/error.hpp"

namespace c2f {

std::string shape_string(const std::array<std::size_t, 4>& s) {
  std::ostringstream os;
  os << "[" << s[0] << ", " << s[1] << ", " << s[2] << ", " << s[3] << "]";
  return os.str();
}

template <typename T>
Tensor4<T>::Tensor4(Shape shape, std::vector<T> data) : shape_(shape), data_(std::move(data)) {
  if (data_.size() != count(shape_)) {
    std::ostringstream os;
    os << "tensor data length " << data_.size() << " does not match shape " << shape_string(shape_);
    throw ShapeError(os.str());
  }
}

template class Tensor4<float>;
template class Tensor4<double>;

}  // namespace c2f
