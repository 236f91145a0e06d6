#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "alcgan/data/image.hpp"
#include "alcgan/data/layout.hpp"

namespace alcgan::data {

using Bytes = std::vector<std::uint8_t>;

/// Decodes any 8/16-bit PNG (gray, palette, RGB, with or without alpha) to RGB8.
RgbBytes decode_png_rgb(const Bytes& png);
Bytes encode_png_rgb(const RgbBytes& image);

/// Decodes an indexed layout PNG to raw palette indices. 8-bit grayscale is
/// also accepted, with the gray value taken as the index.
IndexMap decode_png_indexed(const Bytes& png);
/// Writes an 8-bit palette PNG using layout_palette() colors.
Bytes encode_png_indexed(const IndexMap& map);

RgbBytes read_png_rgb(const std::filesystem::path& path);
void write_png_rgb(const std::filesystem::path& path, const RgbBytes& image);
IndexMap read_png_indexed(const std::filesystem::path& path);
void write_png_indexed(const std::filesystem::path& path, const IndexMap& map);

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const Bytes& bytes);

} // namespace alcgan::data
