#pragma once

#include <filesystem>

#include "wseg/image.hpp"

namespace wseg {

// Reads 8-bit PNG (gray, RGB, palette; alpha is dropped with a warning) or
// binary PGM/PPM with maxval 255. Samples are scaled by 1/255.
Image load_image(const std::filesystem::path& path);

// Any sample >= 128 reads as 1. Colour files are reduced to luma first.
BinaryMask load_mask(const std::filesystem::path& path);

TextureMap load_texture(const std::filesystem::path& path);

// 8-bit PNG output; real values are quantised as round(v * 255).
void save_image(const Image& img, const std::filesystem::path& path);
void save_image(const BinaryMask& mask, const std::filesystem::path& path);
void save_image(const TextureMap& map, const std::filesystem::path& path);

}  // namespace wseg
