#include "wseg/nn/layers.hpp"

namespace wseg::nn {
namespace {

template <typename Scalar>
void im2col(const Tensor4<Scalar>& x, int n, int kernel, int pad, int out_h, int out_w, RowMatrix<Scalar>& col) {
  const int channels = x.channels();
  const int h = x.height();
  const int w = x.width();
  col.resize(static_cast<Eigen::Index>(channels) * kernel * kernel, static_cast<Eigen::Index>(out_h) * out_w);
  const Scalar* src = x.data().data() + n * x.shape().item_size();
  for (int c = 0; c < channels; ++c) {
    const Scalar* plane = src + static_cast<Eigen::Index>(c) * h * w;
    for (int ky = 0; ky < kernel; ++ky) {
      for (int kx = 0; kx < kernel; ++kx) {
        Scalar* row = col.data() + ((static_cast<Eigen::Index>(c) * kernel + ky) * kernel + kx) * col.cols();
        for (int oy = 0; oy < out_h; ++oy) {
          const int iy = oy + ky - pad;
          Scalar* dst = row + static_cast<Eigen::Index>(oy) * out_w;
          if (iy < 0 || iy >= h) {
            std::fill(dst, dst + out_w, Scalar(0));
            continue;
          }
          const Scalar* line = plane + static_cast<Eigen::Index>(iy) * w;
          for (int ox = 0; ox < out_w; ++ox) {
            const int ix = ox + kx - pad;
            dst[ox] = (ix < 0 || ix >= w) ? Scalar(0) : line[ix];
          }
        }
      }
    }
  }
}

template <typename Scalar>
void col2im_add(const RowMatrix<Scalar>& col, int kernel, int pad, int out_h, int out_w, Tensor4<Scalar>& dx, int n) {
  const int channels = dx.channels();
  const int h = dx.height();
  const int w = dx.width();
  Scalar* dst = dx.data().data() + n * dx.shape().item_size();
  for (int c = 0; c < channels; ++c) {
    Scalar* plane = dst + static_cast<Eigen::Index>(c) * h * w;
    for (int ky = 0; ky < kernel; ++ky) {
      for (int kx = 0; kx < kernel; ++kx) {
        const Scalar* row = col.data() + ((static_cast<Eigen::Index>(c) * kernel + ky) * kernel + kx) * col.cols();
        for (int oy = 0; oy < out_h; ++oy) {
          const int iy = oy + ky - pad;
          if (iy < 0 || iy >= h) continue;
          const Scalar* srow = row + static_cast<Eigen::Index>(oy) * out_w;
          Scalar* line = plane + static_cast<Eigen::Index>(iy) * w;
          for (int ox = 0; ox < out_w; ++ox) {
            const int ix = ox + kx - pad;
            if (ix >= 0 && ix < w) line[ix] += srow[ox];
          }
        }
      }
    }
  }
}

template <typename Scalar>
void check_conv_shapes(const Tensor4<Scalar>& x, const Eigen::Ref<const RowMatrix<Scalar>>& weights,
                       Eigen::Index bias_size, int kernel, int pad) {
  const Eigen::Index expect_cols = static_cast<Eigen::Index>(x.channels()) * kernel * kernel;
  if (weights.cols() != expect_cols || bias_size != weights.rows()) {
    throw ShapeError("conv: input " + x.shape().str() + " incompatible with weights " + std::to_string(weights.rows()) +
                     "x" + std::to_string(weights.cols()) + " (kernel " + std::to_string(kernel) + ", bias " +
                     std::to_string(bias_size) + ")");
  }
  if (pad != 0 && 2 * pad != kernel - 1) throw ShapeError("conv: pad must be 0 or (k-1)/2");
  if (x.height() + 2 * pad < kernel || x.width() + 2 * pad < kernel) {
    throw ShapeError("conv: input " + x.shape().str() + " smaller than kernel");
  }
}

}  // namespace

template <typename Scalar>
Tensor4<Scalar> conv2d_forward(const Tensor4<Scalar>& x, const Eigen::Ref<const RowMatrix<Scalar>>& weights,
                               const Eigen::Ref<const Vector<Scalar>>& bias, int kernel, int pad) {
  check_conv_shapes(x, weights, bias.size(), kernel, pad);
  const int out_h = x.height() + 2 * pad - kernel + 1;
  const int out_w = x.width() + 2 * pad - kernel + 1;
  Tensor4<Scalar> y(Shape4{x.batch(), static_cast<int>(weights.rows()), out_h, out_w});
  RowMatrix<Scalar> col;
  for (int n = 0; n < x.batch(); ++n) {
    auto out = y.item(n);
    if (kernel == 1 && pad == 0) {
      out.noalias() = weights * x.item(n);
    } else {
      im2col(x, n, kernel, pad, out_h, out_w, col);
      out.noalias() = weights * col;
    }
    out.colwise() += bias;
  }
  return y;
}

template <typename Scalar>
void conv2d_backward(const Tensor4<Scalar>& x, const Eigen::Ref<const RowMatrix<Scalar>>& weights,
                     const Tensor4<Scalar>& dy, int kernel, int pad, Tensor4<Scalar>* dx,
                     Eigen::Ref<RowMatrix<Scalar>> dweights, Eigen::Ref<Vector<Scalar>> dbias) {
  check_conv_shapes(x, weights, dbias.size(), kernel, pad);
  const int out_h = dy.height();
  const int out_w = dy.width();
  if (dy.batch() != x.batch() || dy.channels() != weights.rows() || out_h != x.height() + 2 * pad - kernel + 1 ||
      out_w != x.width() + 2 * pad - kernel + 1) {
    throw ShapeError("conv backward: output gradient " + dy.shape().str() + " does not match input " + x.shape().str());
  }
  if (dx) *dx = Tensor4<Scalar>(x.shape());
  RowMatrix<Scalar> col;
  RowMatrix<Scalar> dcol;
  for (int n = 0; n < x.batch(); ++n) {
    const auto g = dy.item(n);
    dbias += g.rowwise().sum();
    if (kernel == 1 && pad == 0) {
      dweights.noalias() += g * x.item(n).transpose();
      if (dx) dx->item(n).noalias() = weights.transpose() * g;
      continue;
    }
    im2col(x, n, kernel, pad, out_h, out_w, col);
    dweights.noalias() += g * col.transpose();
    if (dx) {
      dcol.noalias() = weights.transpose() * g;
      col2im_add(dcol, kernel, pad, out_h, out_w, *dx, n);
    }
  }
}

template <typename Scalar>
Tensor4<Scalar> relu_forward(const Tensor4<Scalar>& x) {
  return Tensor4<Scalar>(x.shape(), x.data().cwiseMax(Scalar(0)));
}

template <typename Scalar>
Tensor4<Scalar> relu_backward(const Tensor4<Scalar>& y, const Tensor4<Scalar>& dy) {
  if (!(y.shape() == dy.shape())) throw ShapeError("relu backward: " + y.shape().str() + " vs " + dy.shape().str());
  return Tensor4<Scalar>(y.shape(), (y.data().array() > Scalar(0)).select(dy.data(), Scalar(0)));
}

template <typename Scalar>
Tensor4<Scalar> maxpool2_forward(const Tensor4<Scalar>& x, std::vector<Eigen::Index>& argmax) {
  if (x.height() % 2 != 0 || x.width() % 2 != 0) {
    throw ShapeError("maxpool2 needs even spatial dims, got " + x.shape().str());
  }
  Tensor4<Scalar> y(Shape4{x.batch(), x.channels(), x.height() / 2, x.width() / 2});
  argmax.assign(static_cast<std::size_t>(y.size()), 0);
  Eigen::Index o = 0;
  for (int n = 0; n < x.batch(); ++n) {
    for (int c = 0; c < x.channels(); ++c) {
      for (int oy = 0; oy < y.height(); ++oy) {
        for (int ox = 0; ox < y.width(); ++ox, ++o) {
          Eigen::Index best = x.index(n, c, 2 * oy, 2 * ox);
          for (int dy = 0; dy < 2; ++dy) {
            for (int dx = 0; dx < 2; ++dx) {
              const Eigen::Index i = x.index(n, c, 2 * oy + dy, 2 * ox + dx);
              if (x.data()[i] > x.data()[best]) best = i;
            }
          }
          argmax[static_cast<std::size_t>(o)] = best;
          y.data()[o] = x.data()[best];
        }
      }
    }
  }
  return y;
}

template <typename Scalar>
Tensor4<Scalar> maxpool2_backward(const Tensor4<Scalar>& dy, const std::vector<Eigen::Index>& argmax,
                                  const Shape4& input_shape) {
  if (static_cast<Eigen::Index>(argmax.size()) != dy.size()) throw ShapeError("maxpool2 backward: argmax size mismatch");
  Tensor4<Scalar> dx(input_shape);
  for (Eigen::Index o = 0; o < dy.size(); ++o) dx.data()[argmax[static_cast<std::size_t>(o)]] += dy.data()[o];
  return dx;
}

template <typename Scalar>
Tensor4<Scalar> upsample2_forward(const Tensor4<Scalar>& x) {
  Tensor4<Scalar> y(Shape4{x.batch(), x.channels(), 2 * x.height(), 2 * x.width()});
  for (int n = 0; n < x.batch(); ++n)
    for (int c = 0; c < x.channels(); ++c)
      for (int yy = 0; yy < y.height(); ++yy)
        for (int xx = 0; xx < y.width(); ++xx) y(n, c, yy, xx) = x(n, c, yy / 2, xx / 2);
  return y;
}

template <typename Scalar>
Tensor4<Scalar> upsample2_backward(const Tensor4<Scalar>& dy) {
  if (dy.height() % 2 != 0 || dy.width() % 2 != 0) throw ShapeError("upsample2 backward: odd gradient dims");
  Tensor4<Scalar> dx(Shape4{dy.batch(), dy.channels(), dy.height() / 2, dy.width() / 2});
  for (int n = 0; n < dy.batch(); ++n)
    for (int c = 0; c < dy.channels(); ++c)
      for (int yy = 0; yy < dy.height(); ++yy)
        for (int xx = 0; xx < dy.width(); ++xx) dx(n, c, yy / 2, xx / 2) += dy(n, c, yy, xx);
  return dx;
}

template <typename Scalar>
Tensor4<Scalar> concat_channels(const Tensor4<Scalar>& a, const Tensor4<Scalar>& b) {
  if (a.batch() != b.batch() || a.height() != b.height() || a.width() != b.width()) {
    throw ShapeError("concat: " + a.shape().str() + " vs " + b.shape().str());
  }
  Tensor4<Scalar> y(Shape4{a.batch(), a.channels() + b.channels(), a.height(), a.width()});
  for (int n = 0; n < a.batch(); ++n) {
    y.item(n).topRows(a.channels()) = a.item(n);
    y.item(n).bottomRows(b.channels()) = b.item(n);
  }
  return y;
}

template <typename Scalar>
void split_channels(const Tensor4<Scalar>& dy, int channels_a, Tensor4<Scalar>& da, Tensor4<Scalar>& db) {
  if (channels_a < 0 || channels_a > dy.channels()) throw ShapeError("split: bad channel count");
  da = Tensor4<Scalar>(Shape4{dy.batch(), channels_a, dy.height(), dy.width()});
  db = Tensor4<Scalar>(Shape4{dy.batch(), dy.channels() - channels_a, dy.height(), dy.width()});
  for (int n = 0; n < dy.batch(); ++n) {
    da.item(n) = dy.item(n).topRows(channels_a);
    db.item(n) = dy.item(n).bottomRows(dy.channels() - channels_a);
  }
}

#define WSEG_INSTANTIATE_LAYERS(S)                                                                                  \
  template Tensor4<S> conv2d_forward(const Tensor4<S>&, const Eigen::Ref<const RowMatrix<S>>&,                     \
                                     const Eigen::Ref<const Vector<S>>&, int, int);                                \
  template void conv2d_backward(const Tensor4<S>&, const Eigen::Ref<const RowMatrix<S>>&, const Tensor4<S>&, int, \
                                int, Tensor4<S>*, Eigen::Ref<RowMatrix<S>>, Eigen::Ref<Vector<S>>);                \
  template Tensor4<S> relu_forward(const Tensor4<S>&);                                                             \
  template Tensor4<S> relu_backward(const Tensor4<S>&, const Tensor4<S>&);                                         \
  template Tensor4<S> maxpool2_forward(const Tensor4<S>&, std::vector<Eigen::Index>&);                             \
  template Tensor4<S> maxpool2_backward(const Tensor4<S>&, const std::vector<Eigen::Index>&, const Shape4&);       \
  template Tensor4<S> upsample2_forward(const Tensor4<S>&);                                                        \
  template Tensor4<S> upsample2_backward(const Tensor4<S>&);                                                       \
  template Tensor4<S> concat_channels(const Tensor4<S>&, const Tensor4<S>&);                                       \
  template void split_channels(const Tensor4<S>&, int, Tensor4<S>&, Tensor4<S>&);

WSEG_INSTANTIATE_LAYERS(float)
WSEG_INSTANTIATE_LAYERS(double)

}  // namespace wseg::nn
