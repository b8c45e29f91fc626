#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "wseg/error.hpp"

namespace wseg {

template <typename Scalar>
using PlaneT = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Plane = PlaneT<float>;
using MaskArray = Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// H x W x C raster with C in {1, 3}; samples are stored row-major and
// channel-interleaved, values in [0, 1].
class Image {
 public:
  Image() = default;
  Image(int height, int width, int channels, float fill = 0.0f);

  static Image from_plane(const Plane& gray);
  static Image from_planes(std::span<const Plane> planes);

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  bool empty() const { return data_.size() == 0; }

  float& at(int y, int x, int c = 0) { return data_[(static_cast<Eigen::Index>(y) * width_ + x) * channels_ + c]; }
  float at(int y, int x, int c = 0) const {
    return data_[(static_cast<Eigen::Index>(y) * width_ + x) * channels_ + c];
  }

  Eigen::ArrayXf& data() { return data_; }
  const Eigen::ArrayXf& data() const { return data_; }

  Plane plane(int c) const;
  void set_plane(int c, const Plane& p);

  // Throws FormatError if a sample lies outside [0, 1] or the buffer length is off.
  void validate() const;

 private:
  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  Eigen::ArrayXf data_;
};

// H x W raster of exact {0, 1} values.
struct BinaryMask {
  MaskArray data;

  BinaryMask() = default;
  BinaryMask(int height, int width, std::uint8_t fill = 0) : data(MaskArray::Constant(height, width, fill)) {}
  explicit BinaryMask(MaskArray d) : data(std::move(d)) {}

  int height() const { return static_cast<int>(data.rows()); }
  int width() const { return static_cast<int>(data.cols()); }
  std::uint8_t operator()(int y, int x) const { return data(y, x); }
  std::uint8_t& operator()(int y, int x) { return data(y, x); }
  long count() const { return static_cast<long>(data.template cast<long>().sum()); }
  bool operator==(const BinaryMask& o) const {
    return data.rows() == o.data.rows() && data.cols() == o.data.cols() && (data == o.data).all();
  }
};

// Weak-label target: H x W raster in [0, 1].
struct TextureMap {
  Plane data;

  TextureMap() = default;
  TextureMap(int height, int width, float fill = 0.0f) : data(Plane::Constant(height, width, fill)) {}
  explicit TextureMap(Plane d) : data(std::move(d)) {}

  int height() const { return static_cast<int>(data.rows()); }
  int width() const { return static_cast<int>(data.cols()); }
};

// Rec.601 luma. A 1-channel input is returned unchanged.
Image to_grayscale(const Image& img);

// Bilinear resampling with half-pixel centres and edge clamping.
template <typename Scalar>
PlaneT<Scalar> resize_bilinear(const PlaneT<Scalar>& src, int out_h, int out_w);
Image resize_bilinear(const Image& img, int out_h, int out_w);

// Sampled Gaussian taps for offsets -r..r with r = ceil(3 sigma), normalised to sum 1.
std::vector<double> gaussian_kernel(double sigma);

// Index into [0, n) with reflect-101 mirroring (edge sample not repeated).
int reflect101(int i, int n);

// Separable Gaussian blur, reflect-101 borders.
template <typename Scalar>
PlaneT<Scalar> gaussian_blur(const PlaneT<Scalar>& src, double sigma);
Image gaussian_blur(const Image& img, double sigma);

// v' = clamp(v + n, 0, 1), n ~ N(0, noise_sigma^2), deterministic per seed.
Image add_gaussian_noise(const Image& img, double noise_sigma, std::uint64_t seed);

// Bilinear downscale by an integer factor then bilinear upscale back to the input size.
Image down_up_sample(const Image& img, int factor);

}  // namespace wseg
