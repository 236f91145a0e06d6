#pragma once

#include <cstdint>
#include <vector>

#include "alcgan/data/layout.hpp"

namespace alcgan::data {

/// Interleaved 8-bit RGB, as decoded from a PNG.
struct RgbBytes {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> data; // H * W * 3

    bool operator==(const RgbBytes&) const = default;
};

/// Planar 3 x H x W image with values in [-1,1].
struct Image {
    int height = 0;
    int width = 0;
    std::vector<float> pixels;

    Image() = default;
    Image(int h, int w, float fill = 0.0f)
        : height(h), width(w), pixels(static_cast<std::size_t>(3) * h * w, fill) {}

    float& at(int c, int y, int x) { return pixels[(static_cast<std::size_t>(c) * height + y) * width + x]; }
    float at(int c, int y, int x) const { return pixels[(static_cast<std::size_t>(c) * height + y) * width + x]; }

    bool operator==(const Image&) const = default;
};

struct PreprocessOptions {
    /// When the height-normalized image would be narrower than the target,
    /// normalize by width and crop vertically instead of rejecting.
    bool portrait_fallback = true;
};

/// Bilinear resize so the output height equals `target`, then a centered
/// target x target crop; bytes p map to 2p/255 - 1.
Image preprocess_image(const RgbBytes& raw, int target, const PreprocessOptions& options = {});

/// Same geometry as preprocess_image with nearest-neighbour sampling, for labels.
IndexMap preprocess_index_map(const IndexMap& raw, int target, const PreprocessOptions& options = {});

/// Affine byte <-> [-1,1] conversions without resampling.
Image normalize_bytes(const RgbBytes& raw);
RgbBytes quantize_image(const Image& image);

} // namespace alcgan::data
