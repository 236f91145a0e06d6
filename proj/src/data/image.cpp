#include "alcgan/data/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "alcgan/error.hpp"

namespace alcgan::data {

namespace {

struct CropPlan {
    int resized_h;
    int resized_w;
    int offset_y;
    int offset_x;
};

CropPlan plan_crop(int h0, int w0, int target, const PreprocessOptions& options) {
    if (target <= 0) throw ValidationError("target", "must be positive");
    if (h0 <= 0 || w0 <= 0) throw ValidationError("image", "empty image");
    CropPlan plan{};
    plan.resized_h = target;
    plan.resized_w = static_cast<int>(std::lround(static_cast<double>(w0) * target / h0));
    if (plan.resized_w < target) {
        if (!options.portrait_fallback) {
            throw ValidationError("image", "width " + std::to_string(plan.resized_w) +
                                               " after resize is narrower than target " + std::to_string(target));
        }
        plan.resized_w = target;
        plan.resized_h = static_cast<int>(std::lround(static_cast<double>(h0) * target / w0));
        if (plan.resized_h < target) throw ValidationError("image", "cannot cover target after resize");
    }
    plan.offset_y = (plan.resized_h - target) / 2;
    plan.offset_x = (plan.resized_w - target) / 2;
    return plan;
}

// Half-pixel-centre source coordinate for output index `i`.
double source_coord(int i, int in_size, int out_size) {
    const double scale = static_cast<double>(in_size) / out_size;
    return std::clamp((i + 0.5) * scale - 0.5, 0.0, static_cast<double>(in_size - 1));
}

} // namespace

Image preprocess_image(const RgbBytes& raw, int target, const PreprocessOptions& options) {
    if (raw.data.size() != static_cast<std::size_t>(raw.height) * raw.width * 3) {
        throw ValidationError("image", "byte buffer does not match dimensions");
    }
    const CropPlan plan = plan_crop(raw.height, raw.width, target, options);
    Image out(target, target);
    for (int y = 0; y < target; ++y) {
        const double sy = source_coord(y + plan.offset_y, raw.height, plan.resized_h);
        const int y0 = static_cast<int>(std::floor(sy));
        const int y1 = std::min(y0 + 1, raw.height - 1);
        const double fy = sy - y0;
        for (int x = 0; x < target; ++x) {
            const double sx = source_coord(x + plan.offset_x, raw.width, plan.resized_w);
            const int x0 = static_cast<int>(std::floor(sx));
            const int x1 = std::min(x0 + 1, raw.width - 1);
            const double fx = sx - x0;
            for (int c = 0; c < 3; ++c) {
                auto px = [&](int yy, int xx) {
                    return static_cast<double>(raw.data[(static_cast<std::size_t>(yy) * raw.width + xx) * 3 + c]);
                };
                const double top = px(y0, x0) * (1 - fx) + px(y0, x1) * fx;
                const double bottom = px(y1, x0) * (1 - fx) + px(y1, x1) * fx;
                const double v = top * (1 - fy) + bottom * fy;
                out.at(c, y, x) = static_cast<float>(2.0 * v / 255.0 - 1.0);
            }
        }
    }
    return out;
}

IndexMap preprocess_index_map(const IndexMap& raw, int target, const PreprocessOptions& options) {
    if (raw.labels.size() != static_cast<std::size_t>(raw.height) * raw.width) {
        throw ValidationError("layout", "index map does not match dimensions");
    }
    const CropPlan plan = plan_crop(raw.height, raw.width, target, options);
    IndexMap out(target, target);
    for (int y = 0; y < target; ++y) {
        const double sy = (y + plan.offset_y + 0.5) * raw.height / plan.resized_h;
        const int iy = std::min(static_cast<int>(sy), raw.height - 1);
        for (int x = 0; x < target; ++x) {
            const double sx = (x + plan.offset_x + 0.5) * raw.width / plan.resized_w;
            const int ix = std::min(static_cast<int>(sx), raw.width - 1);
            out.at(y, x) = raw.at(iy, ix);
        }
    }
    return out;
}

Image normalize_bytes(const RgbBytes& raw) {
    Image out(raw.height, raw.width);
    for (int y = 0; y < raw.height; ++y) {
        for (int x = 0; x < raw.width; ++x) {
            for (int c = 0; c < 3; ++c) {
                const auto p = raw.data[(static_cast<std::size_t>(y) * raw.width + x) * 3 + c];
                out.at(c, y, x) = static_cast<float>(2.0 * p / 255.0 - 1.0);
            }
        }
    }
    return out;
}

RgbBytes quantize_image(const Image& image) {
    RgbBytes out;
    out.height = image.height;
    out.width = image.width;
    out.data.resize(static_cast<std::size_t>(image.height) * image.width * 3);
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            for (int c = 0; c < 3; ++c) {
                const double v = std::lround((static_cast<double>(image.at(c, y, x)) + 1.0) * 127.5);
                out.data[(static_cast<std::size_t>(y) * image.width + x) * 3 + c] =
                    static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
            }
        }
    }
    return out;
}

} // namespace alcgan::data
