#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "wseg/error.hpp"

namespace wseg::nn {

struct Shape4 {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;

  Eigen::Index size() const { return static_cast<Eigen::Index>(n) * c * h * w; }
  Eigen::Index item_size() const { return static_cast<Eigen::Index>(c) * h * w; }
  bool operator==(const Shape4&) const = default;
  std::string str() const;
};

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using RowMatrixMap = Eigen::Map<RowMatrix<Scalar>>;
template <typename Scalar>
using ConstRowMatrixMap = Eigen::Map<const RowMatrix<Scalar>>;

// Dense NCHW tensor, row-major.
template <typename Scalar>
class Tensor4 {
 public:
  Tensor4() = default;
  explicit Tensor4(Shape4 shape, Scalar fill = Scalar(0)) : shape_(shape), data_(Vector<Scalar>::Constant(shape.size(), fill)) {}
  Tensor4(Shape4 shape, Vector<Scalar> data);

  const Shape4& shape() const { return shape_; }
  int batch() const { return shape_.n; }
  int channels() const { return shape_.c; }
  int height() const { return shape_.h; }
  int width() const { return shape_.w; }
  Eigen::Index size() const { return data_.size(); }

  Vector<Scalar>& data() { return data_; }
  const Vector<Scalar>& data() const { return data_; }

  Scalar& operator()(int n, int c, int y, int x) { return data_[index(n, c, y, x)]; }
  Scalar operator()(int n, int c, int y, int x) const { return data_[index(n, c, y, x)]; }

  Eigen::Index index(int n, int c, int y, int x) const {
    return ((static_cast<Eigen::Index>(n) * shape_.c + c) * shape_.h + y) * shape_.w + x;
  }

  // Batch item n viewed as a channels x (H*W) matrix.
  RowMatrixMap<Scalar> item(int n) {
    return RowMatrixMap<Scalar>(data_.data() + n * shape_.item_size(), shape_.c, static_cast<Eigen::Index>(shape_.h) * shape_.w);
  }
  ConstRowMatrixMap<Scalar> item(int n) const {
    return ConstRowMatrixMap<Scalar>(data_.data() + n * shape_.item_size(), shape_.c,
                                     static_cast<Eigen::Index>(shape_.h) * shape_.w);
  }

  void set_zero() { data_.setZero(); }

  template <typename Other>
  Tensor4<Other> cast() const {
    return Tensor4<Other>(shape_, data_.template cast<Other>());
  }

 private:
  Shape4 shape_;
  Vector<Scalar> data_;
};

// Trainable tensor: flat value and gradient with a logical shape, e.g. {outC, inC, kh, kw} or {outC}.
template <typename Scalar>
struct Parameter {
  std::string name;
  std::vector<int> shape;
  Vector<Scalar> value;
  Vector<Scalar> grad;

  Parameter() = default;
  Parameter(std::string n, std::vector<int> s);
  Eigen::Index size() const { return value.size(); }
};

std::string shape_str(const std::vector<int>& shape);
Eigen::Index shape_size(const std::vector<int>& shape);

}  // namespace wseg::nn
