#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <vector>

#include <json.hpp>

#include "alcgan/data/manifest.hpp"

namespace alcgan::data {

using Rgb = std::array<float, 3>;

/// Procedural scene generator with an exactly known (layout, attributes) -> image map.
///
/// Entry j of `classes` is the canonical label index rendered with
/// `base_colors[j]`; entry k of `attributes` is the attribute slot whose
/// strength scales `attribute_effects[k][j]`. classes[0] plays the sky role:
/// every generated layout contains it as the top band.
struct ToySceneSpec {
    int resolution = 32;
    std::vector<int> classes;
    std::vector<int> attributes;
    std::vector<Rgb> base_colors;
    std::vector<std::vector<Rgb>> attribute_effects; // [attribute][class]
    double noise_sigma = 0.02;

    int class_count() const noexcept { return static_cast<int>(classes.size()); }
    int attribute_count() const noexcept { return static_cast<int>(attributes.size()); }
    /// Position of a canonical label in `classes`, or -1.
    int class_slot(int label) const noexcept;

    /// Four classes (sky, ground, water, building) and four attributes
    /// (night, sunrisesunset, clouds, fog) at 32 x 32 with noise 0.02.
    static ToySceneSpec defaults();
    static ToySceneSpec from_json(const nlohmann::json& doc);
    nlohmann::json to_json() const;

    /// Throws ValidationError on inconsistent sizes or out-of-range values.
    void validate() const;
};

/// Noiseless oracle: clamp(base[class] + sum_k a_k * effect[k][class]) per pixel.
Image render_toy(const SemanticLayout& layout, const AttributeVector& attributes, const ToySceneSpec& spec);

/// Random axis-aligned partition: a sky band on top, the lower part split into
/// up to three rectangles, and optionally a block standing on the horizon.
SemanticLayout random_toy_layout(const ToySceneSpec& spec, std::mt19937_64& rng);

/// Active attribute slots uniform in [0,1]; all other slots 0.
AttributeVector random_toy_attributes(const ToySceneSpec& spec, std::mt19937_64& rng);

/// n samples: random layout, random attributes, render + N(0, noise_sigma^2)
/// pixel noise, clamped to [-1,1]. Bit-identical for a given seed.
std::vector<SceneSample> generate_toy_dataset(const ToySceneSpec& spec, int n, std::uint64_t seed);

} // namespace alcgan::data
