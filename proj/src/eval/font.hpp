#pragma once

#include <string_view>

#include "alcgan/data/image.hpp"

namespace alcgan::eval {

inline constexpr int kGlyphWidth = 3;
inline constexpr int kGlyphHeight = 5;
inline constexpr int kGlyphAdvance = 4;

/// Draws `text` with its top-left corner at (x, y), clipped to the canvas.
/// Letters are case-insensitive; unsupported characters render as '?'.
void draw_text(data::RgbBytes& canvas, int x, int y, std::string_view text, std::uint8_t value);

inline int text_width(std::string_view text) {
    return text.empty() ? 0 : static_cast<int>(text.size()) * kGlyphAdvance - 1;
}

} // namespace alcgan::eval
