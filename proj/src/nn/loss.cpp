#include "wseg/nn/loss.hpp"

#include <algorithm>
#include <cmath>

namespace wseg::nn {

template <typename Scalar>
Scalar sigmoid(Scalar x) {
  if (x >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-x));
  const Scalar e = std::exp(x);
  return e / (Scalar(1) + e);
}

template <typename Scalar>
LossResult<Scalar> loss_mse(const Tensor4<Scalar>& pred, const Tensor4<Scalar>& target) {
  if (!(pred.shape() == target.shape())) {
    throw ShapeError("loss_mse: prediction " + pred.shape().str() + " vs target " + target.shape().str());
  }
  LossResult<Scalar> r;
  r.grad = Tensor4<Scalar>(pred.shape());
  const Eigen::Index count = pred.size();
  if (count == 0) return r;
  const Scalar scale = Scalar(2) / static_cast<Scalar>(count);
  Scalar sum = 0;
  for (Eigen::Index i = 0; i < count; ++i) {
    const Scalar s = sigmoid(pred.data()[i]);
    const Scalar d = s - target.data()[i];
    sum += d * d;
    r.grad.data()[i] = scale * d * s * (Scalar(1) - s);
  }
  r.value = sum / static_cast<Scalar>(count);
  return r;
}

template <typename Scalar>
LossResult<Scalar> loss_softmax_ce(const Tensor4<Scalar>& pred, const LabelBatch& target, Scalar pos_weight) {
  if (pred.channels() != 2) {
    throw ShapeError("loss_softmax_ce: expected 2 logit channels, got " + pred.shape().str());
  }
  if (target.n != pred.batch() || target.h != pred.height() || target.w != pred.width() ||
      target.labels.size() != static_cast<std::size_t>(target.n) * target.h * target.w) {
    throw ShapeError("loss_softmax_ce: labels " + std::to_string(target.n) + "x" + std::to_string(target.h) + "x" +
                     std::to_string(target.w) + " vs logits " + pred.shape().str());
  }
  LossResult<Scalar> r;
  r.grad = Tensor4<Scalar>(pred.shape());
  Scalar total = 0;
  Scalar weight_sum = 0;
  std::size_t p = 0;
  for (int n = 0; n < pred.batch(); ++n) {
    for (int y = 0; y < pred.height(); ++y) {
      for (int x = 0; x < pred.width(); ++x, ++p) {
        const int label = target.labels[p];
        if (label > 1) throw ArgumentError("loss_softmax_ce: label values must be 0 or 1");
        const Scalar l0 = pred(n, 0, y, x);
        const Scalar l1 = pred(n, 1, y, x);
        const Scalar m = std::max(l0, l1);
        const Scalar lse = m + std::log(std::exp(l0 - m) + std::exp(l1 - m));
        const Scalar w = label ? pos_weight : Scalar(1);
        total += w * (lse - (label ? l1 : l0));
        weight_sum += w;
        const Scalar p1 = std::exp(l1 - lse);
        const Scalar p0 = std::exp(l0 - lse);
        r.grad(n, 0, y, x) = w * (p0 - (label == 0 ? Scalar(1) : Scalar(0)));
        r.grad(n, 1, y, x) = w * (p1 - (label == 1 ? Scalar(1) : Scalar(0)));
      }
    }
  }
  if (weight_sum > Scalar(0)) {
    r.value = total / weight_sum;
    r.grad.data() /= weight_sum;
  }
  return r;
}

template float sigmoid(float);
template double sigmoid(double);
template LossResult<float> loss_mse(const Tensor4<float>&, const Tensor4<float>&);
template LossResult<double> loss_mse(const Tensor4<double>&, const Tensor4<double>&);
template LossResult<float> loss_softmax_ce(const Tensor4<float>&, const LabelBatch&, float);
template LossResult<double> loss_softmax_ce(const Tensor4<double>&, const LabelBatch&, double);

}  // namespace wseg::nn
