#include "alcgan/eval/toy_metrics.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <random>

#include "alcgan/error.hpp"
#include "alcgan/eval/grid.hpp"

namespace alcgan::eval {

namespace {

struct SegmentMeans {
    std::array<std::array<double, 3>, data::kLayoutChannels> sum{};
    std::array<std::size_t, data::kLayoutChannels> count{};
};

SegmentMeans segment_sums(const data::Image& image, const data::SemanticLayout& layout) {
    if (image.height != layout.height() || image.width != layout.width()) {
        throw ValidationError("image", "image and layout sizes differ");
    }
    SegmentMeans m;
    for (int y = 0; y < layout.height(); ++y) {
        for (int x = 0; x < layout.width(); ++x) {
            const int l = layout.label(y, x);
            ++m.count[l];
            for (int c = 0; c < 3; ++c) m.sum[l][c] += image.at(c, y, x);
        }
    }
    return m;
}

} // namespace

double segment_color_error(const data::Image& generated, const data::SemanticLayout& layout,
                           const data::Image& reference) {
    const auto g = segment_sums(generated, layout);
    const auto r = segment_sums(reference, layout);
    double total = 0.0;
    int segments = 0;
    for (int l = 0; l < data::kLayoutChannels; ++l) {
        if (g.count[l] == 0) continue;
        double sq = 0.0;
        for (int c = 0; c < 3; ++c) {
            const double d = (g.sum[l][c] - r.sum[l][c]) / static_cast<double>(g.count[l]);
            sq += d * d;
        }
        total += std::sqrt(sq);
        ++segments;
    }
    return total / segments;
}

double segment_luminance(const data::Image& image, const data::SemanticLayout& layout, int label) {
    const auto m = segment_sums(image, layout);
    if (label < 0 || label >= data::kLayoutChannels || m.count[label] == 0) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    const auto& s = m.sum[label];
    return (0.299 * s[0] + 0.587 * s[1] + 0.114 * s[2]) / static_cast<double>(m.count[label]);
}

ToyEvaluation evaluate_toy(const model::Generator<float>& generator, const data::ToySceneSpec& spec,
                           const ToyEvalOptions& options) {
    spec.validate();
    if (options.layouts <= 0) throw ValidationError("layouts", "must be positive");
    if (generator.config().resolution != spec.resolution) {
        throw ValidationError("resolution", "generator and toy spec resolutions differ");
    }
    require_finite_weights(generator);

    const int sky = spec.classes.front();
    ToyEvaluation ev;
    std::mt19937_64 rng(options.layout_seed);
    int monotone = 0;
    for (int i = 0; i < options.layouts; ++i) {
        Probe probe;
        probe.layout = data::random_toy_layout(spec, rng);
        probe.attributes = data::random_toy_attributes(spec, rng);
        probe.seed = options.noise_seed + static_cast<std::uint64_t>(i);

        const auto reference = data::render_toy(probe.layout, probe.attributes, spec);
        ev.layout_errors.push_back(segment_color_error(generate_image(generator, probe), probe.layout, reference));

        double previous = std::numeric_limits<double>::infinity();
        bool falling = true;
        for (double s : options.strengths) {
            Probe step = probe;
            step.attributes.set(options.sweep_attribute, s);
            const double luma = segment_luminance(generate_image(generator, step), step.layout, sky);
            falling = falling && luma < previous;
            previous = luma;
        }
        ev.sweep_monotone.push_back(falling);
        monotone += falling ? 1 : 0;
    }
    double sum = 0.0;
    for (double e : ev.layout_errors) sum += e;
    ev.color_error = sum / options.layouts;
    ev.sweep_monotone_fraction = static_cast<double>(monotone) / options.layouts;
    return ev;
}

} // namespace alcgan::eval
