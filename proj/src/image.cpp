#include "wseg/image.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace wseg {

Image::Image(int height, int width, int channels, float fill)
    : height_(height), width_(width), channels_(channels) {
  if (height < 0 || width < 0) throw ArgumentError("image dimensions must be non-negative");
  if (channels != 1 && channels != 3) {
    throw ArgumentError("image channels must be 1 or 3, got " + std::to_string(channels));
  }
  data_ = Eigen::ArrayXf::Constant(static_cast<Eigen::Index>(height) * width * channels, fill);
}

Image Image::from_plane(const Plane& gray) {
  Image img(static_cast<int>(gray.rows()), static_cast<int>(gray.cols()), 1);
  img.set_plane(0, gray);
  return img;
}

Image Image::from_planes(std::span<const Plane> planes) {
  if (planes.size() != 1 && planes.size() != 3) throw ArgumentError("from_planes needs 1 or 3 planes");
  Image img(static_cast<int>(planes[0].rows()), static_cast<int>(planes[0].cols()), static_cast<int>(planes.size()));
  for (std::size_t c = 0; c < planes.size(); ++c) img.set_plane(static_cast<int>(c), planes[c]);
  return img;
}

Plane Image::plane(int c) const {
  Plane p(height_, width_);
  for (int y = 0; y < height_; ++y)
    for (int x = 0; x < width_; ++x) p(y, x) = at(y, x, c);
  return p;
}

void Image::set_plane(int c, const Plane& p) {
  if (p.rows() != height_ || p.cols() != width_) throw ShapeError("plane size does not match image");
  for (int y = 0; y < height_; ++y)
    for (int x = 0; x < width_; ++x) at(y, x, c) = p(y, x);
}

void Image::validate() const {
  if (data_.size() != static_cast<Eigen::Index>(height_) * width_ * channels_) {
    throw FormatError("image buffer length does not match its shape");
  }
  if (data_.size() > 0 && (data_.minCoeff() < 0.0f || data_.maxCoeff() > 1.0f)) {
    throw FormatError("image sample outside [0, 1]");
  }
}

Image to_grayscale(const Image& img) {
  if (img.channels() == 1) return img;
  Image out(img.height(), img.width(), 1);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const float v = 0.299f * img.at(y, x, 0) + 0.587f * img.at(y, x, 1) + 0.114f * img.at(y, x, 2);
      out.at(y, x) = std::clamp(v, 0.0f, 1.0f);
    }
  }
  return out;
}

template <typename Scalar>
PlaneT<Scalar> resize_bilinear(const PlaneT<Scalar>& src, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1) throw ArgumentError("resize_bilinear: output dimensions must be >= 1");
  const int in_h = static_cast<int>(src.rows());
  const int in_w = static_cast<int>(src.cols());
  if (in_h < 1 || in_w < 1) throw ArgumentError("resize_bilinear: empty input");
  PlaneT<Scalar> out(out_h, out_w);
  const double sy = static_cast<double>(in_h) / out_h;
  const double sx = static_cast<double>(in_w) / out_w;
  for (int y = 0; y < out_h; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(in_h - 1));
    const int y0 = static_cast<int>(std::floor(fy));
    const int y1 = std::min(y0 + 1, in_h - 1);
    const double wy = fy - y0;
    for (int x = 0; x < out_w; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(in_w - 1));
      const int x0 = static_cast<int>(std::floor(fx));
      const int x1 = std::min(x0 + 1, in_w - 1);
      const double wx = fx - x0;
      const double top = (1.0 - wx) * src(y0, x0) + wx * src(y0, x1);
      const double bot = (1.0 - wx) * src(y1, x0) + wx * src(y1, x1);
      out(y, x) = static_cast<Scalar>((1.0 - wy) * top + wy * bot);
    }
  }
  return out;
}

template PlaneT<float> resize_bilinear<float>(const PlaneT<float>&, int, int);
template PlaneT<double> resize_bilinear<double>(const PlaneT<double>&, int, int);

Image resize_bilinear(const Image& img, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1) throw ArgumentError("resize_bilinear: output dimensions must be >= 1");
  std::vector<Plane> planes;
  for (int c = 0; c < img.channels(); ++c) {
    planes.push_back(resize_bilinear<float>(img.plane(c), out_h, out_w).cwiseMax(0.0f).cwiseMin(1.0f));
  }
  return Image::from_planes(planes);
}

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma > 0.0)) throw ArgumentError("gaussian sigma must be > 0, got " + std::to_string(sigma));
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * r + 1);
  double sum = 0.0;
  for (int i = -r; i <= r; ++i) {
    k[i + r] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    sum += k[i + r];
  }
  for (double& v : k) v /= sum;
  return k;
}

int reflect101(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * n - 2 - i;
  }
  return i;
}

template <typename Scalar>
PlaneT<Scalar> gaussian_blur(const PlaneT<Scalar>& src, double sigma) {
  const std::vector<double> k = gaussian_kernel(sigma);
  const int r = static_cast<int>(k.size() / 2);
  const int h = static_cast<int>(src.rows());
  const int w = static_cast<int>(src.cols());
  PlaneT<Scalar> tmp(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      Scalar acc = 0;
      for (int j = -r; j <= r; ++j) acc += static_cast<Scalar>(k[j + r]) * src(y, reflect101(x + j, w));
      tmp(y, x) = acc;
    }
  }
  PlaneT<Scalar> out(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      Scalar acc = 0;
      for (int j = -r; j <= r; ++j) acc += static_cast<Scalar>(k[j + r]) * tmp(reflect101(y + j, h), x);
      out(y, x) = acc;
    }
  }
  return out;
}

template PlaneT<float> gaussian_blur<float>(const PlaneT<float>&, double);
template PlaneT<double> gaussian_blur<double>(const PlaneT<double>&, double);

Image gaussian_blur(const Image& img, double sigma) {
  std::vector<Plane> planes;
  for (int c = 0; c < img.channels(); ++c) {
    planes.push_back(gaussian_blur<float>(img.plane(c), sigma).cwiseMax(0.0f).cwiseMin(1.0f));
  }
  return Image::from_planes(planes);
}

Image add_gaussian_noise(const Image& img, double noise_sigma, std::uint64_t seed) {
  if (noise_sigma < 0.0) throw ArgumentError("noise sigma must be >= 0");
  Image out = img;
  if (noise_sigma == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, noise_sigma);
  for (Eigen::Index i = 0; i < out.data().size(); ++i) {
    out.data()[i] = static_cast<float>(std::clamp(img.data()[i] + normal(rng), 0.0, 1.0));
  }
  return out;
}

Image down_up_sample(const Image& img, int factor) {
  if (factor < 2) throw ArgumentError("down_up_sample factor must be >= 2, got " + std::to_string(factor));
  if (img.height() < factor || img.width() < factor) {
    throw ArgumentError("down_up_sample: image smaller than factor");
  }
  const Image small = resize_bilinear(img, img.height() / factor, img.width() / factor);
  return resize_bilinear(small, img.height(), img.width());
}

}  // namespace wseg
