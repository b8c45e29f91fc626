#include "wseg/nn/tensor.hpp"

#include <numeric>

namespace wseg::nn {

std::string Shape4::str() const {
  return std::to_string(n) + "x" + std::to_string(c) + "x" + std::to_string(h) + "x" + std::to_string(w);
}

std::string shape_str(const std::vector<int>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) s += (i ? "," : "") + std::to_string(shape[i]);
  return s + "]";
}

Eigen::Index shape_size(const std::vector<int>& shape) {
  return std::accumulate(shape.begin(), shape.end(), Eigen::Index{1}, [](Eigen::Index a, int b) { return a * b; });
}

template <typename Scalar>
Tensor4<Scalar>::Tensor4(Shape4 shape, Vector<Scalar> data) : shape_(shape), data_(std::move(data)) {
  if (data_.size() != shape_.size()) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) + " does not match shape " + shape_.str());
  }
}

template <typename Scalar>
Parameter<Scalar>::Parameter(std::string n, std::vector<int> s)
    : name(std::move(n)), shape(std::move(s)), value(Vector<Scalar>::Zero(shape_size(shape))),
      grad(Vector<Scalar>::Zero(shape_size(shape))) {}

template class Tensor4<float>;
template class Tensor4<double>;
template struct Parameter<float>;
template struct Parameter<double>;

}  // namespace wseg::nn
