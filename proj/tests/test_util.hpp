#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "wseg/image.hpp"

namespace testutil {

// Fresh, empty directory under the system temp dir.
inline std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("wseg_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline wseg::BinaryMask random_mask(int h, int w, double p, std::mt19937_64& rng) {
  std::bernoulli_distribution b(p);
  wseg::BinaryMask m(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) m(y, x) = b(rng) ? 1 : 0;
  return m;
}

inline wseg::Plane random_plane(int h, int w, std::mt19937_64& rng) {
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  wseg::Plane p(h, w);
  for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = u(rng);
  return p;
}

inline wseg::Image random_image(int h, int w, int c, std::mt19937_64& rng) {
  wseg::Image img(h, w, c);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (Eigen::Index i = 0; i < img.data().size(); ++i) img.data()[i] = u(rng);
  return img;
}

inline int mirror(int i, int n) {
  while (i < 0 || i >= n) i = i < 0 ? -i : 2 * (n - 1) - i;
  return i;
}

// Dense 2-D Gaussian convolution with reflect-101 borders.
inline wseg::Plane dense_blur(const wseg::Plane& src, double sigma) {
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<std::vector<double>> k(2 * r + 1, std::vector<double>(2 * r + 1));
  double total = 0.0;
  for (int i = -r; i <= r; ++i)
    for (int j = -r; j <= r; ++j) total += k[i + r][j + r] = std::exp(-(i * i + j * j) / (2 * sigma * sigma));
  wseg::Plane out(src.rows(), src.cols());
  const int h = static_cast<int>(src.rows());
  const int w = static_cast<int>(src.cols());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i)
        for (int j = -r; j <= r; ++j) acc += k[i + r][j + r] / total * src(mirror(y + i, h), mirror(x + j, w));
      out(y, x) = static_cast<float>(acc);
    }
  return out;
}

}  // namespace testutil
