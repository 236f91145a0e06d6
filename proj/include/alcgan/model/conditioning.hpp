#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "alcgan/data/attributes.hpp"
#include "alcgan/data/layout.hpp"
#include "alcgan/model/config.hpp"
#include "alcgan/nn/layers.hpp"

namespace alcgan::model {

/// z ~ N(0, I) of length `dim`, drawn from a seeded mt19937_64.
std::vector<float> sample_noise(int dim, std::uint64_t seed);
void sample_noise(std::mt19937_64& rng, std::span<float> out);

/// One sample's conditioning volume R x R x C in factored form: the layout as
/// per-pixel hot indices (when layout channels are wired in) and the tiled
/// channels as one value each. Channel order is [layout | attributes | noise].
struct ConditioningVolume {
    int resolution = 0;
    int layout_channels = 0;
    std::vector<std::uint8_t> labels; // R*R, empty when layout_channels == 0
    std::vector<float> constants;     // attributes then noise

    int channels() const noexcept { return layout_channels + static_cast<int>(constants.size()); }
    float at(int channel, int y, int x) const;
    /// Materialized {1, C, R, R} tensor.
    Tensor<float> dense() const;
};

/// Generator input for one sample. The variant is read from the config's
/// channel counts: a missing layout or attribute vector is an error only when
/// its channels are wired in, and a supplied one is dropped otherwise.
ConditioningVolume assemble_generator_input(std::span<const float> z, const data::AttributeVector* attributes,
                                            const data::SemanticLayout* layout, const GeneratorConfig& config);

/// Discriminator attribute-layout branch input: the same volume without noise.
ConditioningVolume assemble_condition_maps(const data::AttributeVector* attributes,
                                           const data::SemanticLayout* layout, const DiscriminatorConfig& config);

/// Stacks same-shaped volumes into a batch.
template <typename T>
nn::StructuredInput<T> stack_conditioning(std::span<const ConditioningVolume> volumes);

/// Batch builder used by training: reuses buffers across steps.
class ConditioningBatch {
public:
    ConditioningBatch(int resolution, int layout_channels, int attribute_channels, int noise_dim);

    /// Fills slot i. `z` may be empty when noise_dim == 0.
    void set(int i, const data::SemanticLayout* layout, const data::AttributeVector* attributes,
             std::span<const float> z);
    void resize(int batch);

    nn::StructuredInput<float>& input() noexcept { return input_; }
    const nn::StructuredInput<float>& input() const noexcept { return input_; }

private:
    int attribute_channels_, noise_dim_;
    nn::StructuredInput<float> input_;
};

} // namespace alcgan::model
