#include "wseg/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <iterator>
#include <string>
#include <vector>

namespace wseg {
namespace {

std::vector<unsigned char> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failure on '" + path.string() + "'");
  return bytes;
}

void write_bytes(const std::filesystem::path& path, const void* data, std::size_t size) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
  if (!out) throw IoError("write failure on '" + path.string() + "'");
}

Image decode_png(const std::vector<unsigned char>& bytes, const std::filesystem::path& path) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size())) {
    throw FormatError("'" + path.string() + "': " + png.message);
  }
  const png_uint_32 native = png.format;
  if (native & PNG_FORMAT_FLAG_LINEAR) {
    png_image_free(&png);
    throw FormatError("'" + path.string() + "': 16-bit PNG is not supported (8-bit only)");
  }
  if (native & PNG_FORMAT_FLAG_ALPHA) {
    std::cerr << "warning: dropping alpha channel of '" << path.string() << "'\n";
  }
  const bool color = (native & PNG_FORMAT_FLAG_COLOR) != 0;
  const bool alpha = (native & PNG_FORMAT_FLAG_ALPHA) != 0;
  png.format = (color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY) | (alpha ? PNG_FORMAT_FLAG_ALPHA : 0);
  const int channels = color ? 3 : 1;
  const int stored = channels + (alpha ? 1 : 0);
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, buffer.data(), 0, nullptr)) {
    const std::string msg = png.message;
    png_image_free(&png);
    throw FormatError("'" + path.string() + "': " + msg);
  }
  Image img(static_cast<int>(png.height), static_cast<int>(png.width), channels);
  const std::size_t pixels = static_cast<std::size_t>(png.height) * png.width;
  for (std::size_t p = 0; p < pixels; ++p)
    for (int c = 0; c < channels; ++c)
      img.data()[static_cast<Eigen::Index>(p * channels + c)] = buffer[p * stored + c] / 255.0f;
  return img;
}

Image decode_pnm(const std::vector<unsigned char>& bytes, const std::filesystem::path& path) {
  const int channels = bytes[1] == '6' ? 3 : 1;
  std::size_t pos = 2;
  auto next_token = [&]() -> long {
    for (;;) {
      while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
      if (pos < bytes.size() && bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        continue;
      }
      break;
    }
    if (pos >= bytes.size() || !std::isdigit(bytes[pos])) {
      throw FormatError("'" + path.string() + "': malformed PNM header");
    }
    long v = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) v = v * 10 + (bytes[pos++] - '0');
    return v;
  };
  const long width = next_token();
  const long height = next_token();
  const long maxval = next_token();
  if (maxval != 255) {
    throw FormatError("'" + path.string() + "': unsupported PNM maxval " + std::to_string(maxval) + " (8-bit only)");
  }
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw FormatError("'" + path.string() + "': malformed PNM header");
  ++pos;
  const std::size_t need = static_cast<std::size_t>(width) * height * channels;
  if (bytes.size() - pos < need) {
    throw FormatError("'" + path.string() + "': truncated PNM payload, expected " + std::to_string(need) + " bytes");
  }
  Image img(static_cast<int>(height), static_cast<int>(width), channels);
  for (std::size_t i = 0; i < need; ++i) img.data()[static_cast<Eigen::Index>(i)] = bytes[pos + i] / 255.0f;
  return img;
}

void encode_png(const std::filesystem::path& path, int height, int width, int channels,
                const std::vector<png_byte>& pixels) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(width);
  png.height = static_cast<png_uint_32>(height);
  png.format = channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png, nullptr, &size, 0, pixels.data(), 0, nullptr)) {
    throw IoError("PNG encode failed for '" + path.string() + "': " + png.message);
  }
  std::vector<png_byte> out(size);
  if (!png_image_write_to_memory(&png, out.data(), &size, 0, pixels.data(), 0, nullptr)) {
    throw IoError("PNG encode failed for '" + path.string() + "': " + png.message);
  }
  write_bytes(path, out.data(), size);
}

png_byte quantize(float v) { return static_cast<png_byte>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f)); }

}  // namespace

Image load_image(const std::filesystem::path& path) {
  const std::vector<unsigned char> bytes = read_bytes(path);
  static constexpr unsigned char kPngSig[8] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
  if (bytes.size() >= 8 && std::equal(kPngSig, kPngSig + 8, bytes.begin())) return decode_png(bytes, path);
  if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '6')) return decode_pnm(bytes, path);
  throw FormatError("'" + path.string() + "': unrecognised image format (expected PNG, PGM P5 or PPM P6)");
}

BinaryMask load_mask(const std::filesystem::path& path) {
  const Image gray = to_grayscale(load_image(path));
  BinaryMask mask(gray.height(), gray.width());
  for (int y = 0; y < gray.height(); ++y)
    for (int x = 0; x < gray.width(); ++x) mask(y, x) = std::lround(gray.at(y, x) * 255.0f) >= 128 ? 1 : 0;
  return mask;
}

TextureMap load_texture(const std::filesystem::path& path) {
  const Image gray = to_grayscale(load_image(path));
  return TextureMap(gray.plane(0));
}

void save_image(const Image& img, const std::filesystem::path& path) {
  std::vector<png_byte> pixels(static_cast<std::size_t>(img.data().size()));
  for (std::size_t i = 0; i < pixels.size(); ++i) pixels[i] = quantize(img.data()[static_cast<Eigen::Index>(i)]);
  encode_png(path, img.height(), img.width(), img.channels(), pixels);
}

void save_image(const BinaryMask& mask, const std::filesystem::path& path) {
  std::vector<png_byte> pixels(static_cast<std::size_t>(mask.data.size()));
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x) pixels[static_cast<std::size_t>(y) * mask.width() + x] = mask(y, x) ? 255 : 0;
  encode_png(path, mask.height(), mask.width(), 1, pixels);
}

void save_image(const TextureMap& map, const std::filesystem::path& path) {
  std::vector<png_byte> pixels(static_cast<std::size_t>(map.data.size()));
  for (int y = 0; y < map.height(); ++y)
    for (int x = 0; x < map.width(); ++x) pixels[static_cast<std::size_t>(y) * map.width() + x] = quantize(map.data(y, x));
  encode_png(path, map.height(), map.width(), 1, pixels);
}

}  // namespace wseg
