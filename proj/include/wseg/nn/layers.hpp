#pragma once

#include <vector>

#include "wseg/nn/tensor.hpp"

namespace wseg::nn {

// Stride-1 cross-correlation. `weights` is outC x (inC*k*k) in [outC, inC, kh, kw]
// order, `bias` has outC entries. Output spatial size is H + 2*pad - k + 1.
template <typename Scalar>
Tensor4<Scalar> conv2d_forward(const Tensor4<Scalar>& x, const Eigen::Ref<const RowMatrix<Scalar>>& weights,
                               const Eigen::Ref<const Vector<Scalar>>& bias, int kernel, int pad);

// Accumulates into dweights / dbias; writes dx when non-null.
template <typename Scalar>
void conv2d_backward(const Tensor4<Scalar>& x, const Eigen::Ref<const RowMatrix<Scalar>>& weights,
                     const Tensor4<Scalar>& dy, int kernel, int pad, Tensor4<Scalar>* dx,
                     Eigen::Ref<RowMatrix<Scalar>> dweights, Eigen::Ref<Vector<Scalar>> dbias);

template <typename Scalar>
Tensor4<Scalar> relu_forward(const Tensor4<Scalar>& x);

// Gradient passes where the forward output was positive.
template <typename Scalar>
Tensor4<Scalar> relu_backward(const Tensor4<Scalar>& y, const Tensor4<Scalar>& dy);

// 2x2 stride-2 max. `argmax` receives, per output element, the flat input index
// of the winning element (first maximum in row-major scan order).
template <typename Scalar>
Tensor4<Scalar> maxpool2_forward(const Tensor4<Scalar>& x, std::vector<Eigen::Index>& argmax);

template <typename Scalar>
Tensor4<Scalar> maxpool2_backward(const Tensor4<Scalar>& dy, const std::vector<Eigen::Index>& argmax,
                                  const Shape4& input_shape);

template <typename Scalar>
Tensor4<Scalar> upsample2_forward(const Tensor4<Scalar>& x);

template <typename Scalar>
Tensor4<Scalar> upsample2_backward(const Tensor4<Scalar>& dy);

template <typename Scalar>
Tensor4<Scalar> concat_channels(const Tensor4<Scalar>& a, const Tensor4<Scalar>& b);

// Inverse of concat_channels for gradients: first `channels_a` channels go to da.
template <typename Scalar>
void split_channels(const Tensor4<Scalar>& dy, int channels_a, Tensor4<Scalar>& da, Tensor4<Scalar>& db);

}  // namespace wseg::nn
