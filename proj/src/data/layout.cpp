#include "alcgan/data/layout.hpp"

#include <string>

#include "alcgan/error.hpp"

namespace alcgan::data {

std::vector<std::uint8_t> SemanticLayout::dense() const {
    const std::size_t plane = static_cast<std::size_t>(height_) * width_;
    std::vector<std::uint8_t> maps(plane * kChannels, 0);
    for (std::size_t p = 0; p < plane; ++p) maps[hot_[p] * plane + p] = 1;
    return maps;
}

double SemanticLayout::labeled_fraction() const {
    if (hot_.empty()) return 0.0;
    std::size_t labeled = 0;
    for (auto c : hot_) labeled += (c != kUnlabeled);
    return static_cast<double>(labeled) / static_cast<double>(hot_.size());
}

SemanticLayout encode_layout(const IndexMap& index_map) {
    if (index_map.height <= 0 || index_map.width <= 0 ||
        index_map.labels.size() != static_cast<std::size_t>(index_map.height) * index_map.width) {
        throw ValidationError("layout", "index map has inconsistent dimensions");
    }
    for (int y = 0; y < index_map.height; ++y) {
        for (int x = 0; x < index_map.width; ++x) {
            if (index_map.at(y, x) >= kLayoutChannels) {
                throw ValidationError("layout[" + std::to_string(y) + "," + std::to_string(x) + "]",
                                      "label index " + std::to_string(index_map.at(y, x)) +
                                          " outside [0,18]");
            }
        }
    }
    SemanticLayout layout;
    layout.height_ = index_map.height;
    layout.width_ = index_map.width;
    layout.hot_ = index_map.labels;
    return layout;
}

IndexMap decode_layout(const SemanticLayout& layout) {
    IndexMap m;
    m.height = layout.height();
    m.width = layout.width();
    m.labels = layout.hot_channels();
    return m;
}

SemanticLayout layout_from_dense(int height, int width, const std::vector<std::uint8_t>& maps) {
    const std::size_t plane = static_cast<std::size_t>(height) * width;
    if (height <= 0 || width <= 0 || maps.size() != plane * kLayoutChannels) {
        throw ValidationError("layout", "dense volume must be 19 x H x W");
    }
    SemanticLayout layout;
    layout.height_ = height;
    layout.width_ = width;
    layout.hot_.assign(plane, 0);
    for (std::size_t p = 0; p < plane; ++p) {
        int hot = -1;
        int count = 0;
        for (int c = 0; c < kLayoutChannels; ++c) {
            const auto v = maps[c * plane + p];
            if (v > 1) count = 2;
            if (v == 1) {
                hot = c;
                ++count;
            }
        }
        if (count != 1) {
            throw ValidationError("layout[" + std::to_string(p / width) + "," + std::to_string(p % width) + "]",
                                  "pixel is not one-hot");
        }
        layout.hot_[p] = static_cast<std::uint8_t>(hot);
    }
    return layout;
}

} // namespace alcgan::data
