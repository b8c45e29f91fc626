#pragma once

#include <cstdint>
#include <vector>

#include "wseg/nn/tensor.hpp"

namespace wseg::nn {

template <typename Scalar>
struct LossResult {
  Scalar value = 0;
  Tensor4<Scalar> grad;  // d value / d logits
};

// Per-pixel class labels in {0, 1}, N x H x W row-major.
struct LabelBatch {
  int n = 0;
  int h = 0;
  int w = 0;
  std::vector<std::uint8_t> labels;
};

// Overflow-free logistic function.
template <typename Scalar>
Scalar sigmoid(Scalar x);

// mean((sigmoid(pred) - target)^2) over every element.
template <typename Scalar>
LossResult<Scalar> loss_mse(const Tensor4<Scalar>& pred, const Tensor4<Scalar>& target);

// Two-class softmax cross-entropy. Wrinkle-class (label 1) pixels carry weight
// pos_weight, background pixels weight 1; the sum is divided by the total weight.
template <typename Scalar>
LossResult<Scalar> loss_softmax_ce(const Tensor4<Scalar>& pred, const LabelBatch& target, Scalar pos_weight = Scalar(1));

}  // namespace wseg::nn
