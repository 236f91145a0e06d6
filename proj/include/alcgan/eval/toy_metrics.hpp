#pragma once

#include <cstdint>
#include <vector>

#include "alcgan/data/toy.hpp"
#include "alcgan/model/networks.hpp"

namespace alcgan::eval {

/// Mean over the layout's classes of the Euclidean RGB distance between the
/// generated segment's mean color and the reference segment's mean color.
double segment_color_error(const data::Image& generated, const data::SemanticLayout& layout,
                           const data::Image& reference);

/// Mean Rec. 601 luma over the pixels labeled `label` (NaN if there are none).
double segment_luminance(const data::Image& image, const data::SemanticLayout& layout, int label);

struct ToyEvalOptions {
    int layouts = 50;
    std::uint64_t layout_seed = 1000003;
    std::uint64_t noise_seed = 17;
    int sweep_attribute = 2; // "night"
    std::vector<double> strengths{0.0, 0.25, 0.5, 0.75, 1.0};
};

struct ToyEvaluation {
    double color_error = 0.0;               // mean of layout_errors
    std::vector<double> layout_errors;
    double sweep_monotone_fraction = 0.0;   // share of layouts with strictly falling sky luma
    std::vector<bool> sweep_monotone;
};

/// Scores a generator against the noiseless oracle on held-out random
/// layouts and attributes drawn from `options.layout_seed`.
ToyEvaluation evaluate_toy(const model::Generator<float>& generator, const data::ToySceneSpec& spec,
                           const ToyEvalOptions& options = {});

} // namespace alcgan::eval
