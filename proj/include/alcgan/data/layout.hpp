#pragma once

#include <cstdint>
#include <vector>

#include "alcgan/data/taxonomy.hpp"

namespace alcgan::data {

/// Raw per-pixel class indices as read from disk. Not validated.
struct IndexMap {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> labels; // row-major

    IndexMap() = default;
    IndexMap(int h, int w, std::uint8_t fill = 0)
        : height(h), width(w), labels(static_cast<std::size_t>(h) * w, fill) {}

    std::uint8_t& at(int y, int x) { return labels[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t at(int y, int x) const { return labels[static_cast<std::size_t>(y) * width + x]; }
    bool operator==(const IndexMap&) const = default;
};

/// H x W x 19 one-hot layout. Stored compactly as the hot channel per pixel, so
/// exactly one channel is 1 at every pixel by construction; channel 18 marks
/// unlabeled pixels.
class SemanticLayout {
public:
    static constexpr int kChannels = kLayoutChannels;

    SemanticLayout() = default;

    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }
    int channels() const noexcept { return kChannels; }

    /// Value of binary map `channel` at (y, x).
    std::uint8_t at(int channel, int y, int x) const noexcept {
        return hot_[static_cast<std::size_t>(y) * width_ + x] == channel ? 1 : 0;
    }
    int label(int y, int x) const noexcept { return hot_[static_cast<std::size_t>(y) * width_ + x]; }
    const std::vector<std::uint8_t>& hot_channels() const noexcept { return hot_; }

    /// Materialized channel-major volume (19 * H * W bytes).
    std::vector<std::uint8_t> dense() const;

    /// Fraction of pixels carrying one of the 18 semantic labels.
    double labeled_fraction() const;

    bool operator==(const SemanticLayout&) const = default;

    friend SemanticLayout encode_layout(const IndexMap& index_map);
    friend SemanticLayout layout_from_dense(int height, int width, const std::vector<std::uint8_t>& maps);

private:
    int height_ = 0;
    int width_ = 0;
    std::vector<std::uint8_t> hot_;
};

/// One-hot encodes an index map. Throws ValidationError naming the first pixel
/// (as "layout[y,x]") whose index is outside [0,18].
SemanticLayout encode_layout(const IndexMap& index_map);
IndexMap decode_layout(const SemanticLayout& layout);

/// Builds a layout from a channel-major 19*H*W binary volume. Rejects volumes
/// where any pixel is not hot in exactly one channel.
SemanticLayout layout_from_dense(int height, int width, const std::vector<std::uint8_t>& maps);

} // namespace alcgan::data
