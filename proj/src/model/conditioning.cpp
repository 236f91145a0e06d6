#include "alcgan/model/conditioning.hpp"

#include <algorithm>
#include <string>

#include "alcgan/error.hpp"

namespace alcgan::model {

std::vector<float> sample_noise(int dim, std::uint64_t seed) {
    if (dim <= 0) throw ValidationError("dim", "noise dimension must be at least 1");
    std::mt19937_64 rng(seed);
    std::vector<float> z(dim);
    sample_noise(rng, z);
    return z;
}

void sample_noise(std::mt19937_64& rng, std::span<float> out) {
    std::normal_distribution<float> normal(0.0f, 1.0f);
    for (float& v : out) v = normal(rng);
}

float ConditioningVolume::at(int channel, int y, int x) const {
    if (channel < layout_channels) {
        return labels[static_cast<std::size_t>(y) * resolution + x] == channel ? 1.0f : 0.0f;
    }
    return constants[channel - layout_channels];
}

Tensor<float> ConditioningVolume::dense() const {
    std::vector<ConditioningVolume> one{*this};
    return stack_conditioning<float>(one).dense();
}

namespace {

void append_layout(ConditioningVolume& v, const data::SemanticLayout* layout, int layout_channels, int resolution) {
    v.resolution = resolution;
    v.layout_channels = layout_channels;
    if (layout_channels == 0) return;
    if (layout == nullptr) throw ValidationError("layout", "this variant requires a semantic layout");
    if (layout->height() != resolution || layout->width() != resolution) {
        throw ValidationError("layout", "expected " + std::to_string(resolution) + "x" + std::to_string(resolution) +
                                            ", got " + std::to_string(layout->height()) + "x" +
                                            std::to_string(layout->width()));
    }
    if (layout_channels != data::kLayoutChannels) {
        throw ValidationError("layout", "layout channel count must be " + std::to_string(data::kLayoutChannels));
    }
    v.labels = layout->hot_channels();
}

void append_attributes(ConditioningVolume& v, const data::AttributeVector* attributes, int attribute_channels) {
    if (attribute_channels == 0) return;
    if (attributes == nullptr) throw ValidationError("attributes", "this variant requires an attribute vector");
    if (attribute_channels != data::kAttributeCount) {
        throw ValidationError("attributes", "attribute channel count must be " +
                                                std::to_string(data::kAttributeCount));
    }
    v.constants.insert(v.constants.end(), attributes->values().begin(), attributes->values().end());
}

} // namespace

ConditioningVolume assemble_generator_input(std::span<const float> z, const data::AttributeVector* attributes,
                                            const data::SemanticLayout* layout, const GeneratorConfig& config) {
    if (static_cast<int>(z.size()) != config.noise_dim) {
        throw ValidationError("z", "expected " + std::to_string(config.noise_dim) + " values, got " +
                                       std::to_string(z.size()));
    }
    ConditioningVolume v;
    append_layout(v, layout, config.layout_channels, config.resolution);
    append_attributes(v, attributes, config.attribute_channels);
    v.constants.insert(v.constants.end(), z.begin(), z.end());
    return v;
}

ConditioningVolume assemble_condition_maps(const data::AttributeVector* attributes,
                                           const data::SemanticLayout* layout, const DiscriminatorConfig& config) {
    ConditioningVolume v;
    append_layout(v, layout, config.layout_channels, config.resolution);
    append_attributes(v, attributes, config.attribute_channels);
    return v;
}

template <typename T>
nn::StructuredInput<T> stack_conditioning(std::span<const ConditioningVolume> volumes) {
    if (volumes.empty()) throw ValidationError("batch", "no conditioning volumes");
    const ConditioningVolume& first = volumes.front();
    const int k = static_cast<int>(first.constants.size());
    nn::StructuredInput<T> in;
    in.batch = static_cast<int>(volumes.size());
    in.resolution = first.resolution;
    in.layout_channels = first.layout_channels;
    if (k > 0) in.constants = Tensor<T>(in.batch, k, 1, 1);
    for (int i = 0; i < in.batch; ++i) {
        const ConditioningVolume& v = volumes[i];
        if (v.resolution != first.resolution || v.layout_channels != first.layout_channels ||
            static_cast<int>(v.constants.size()) != k) {
            throw ValidationError("batch[" + std::to_string(i) + "]", "conditioning shape differs from batch[0]");
        }
        in.labels.insert(in.labels.end(), v.labels.begin(), v.labels.end());
        for (int c = 0; c < k; ++c) in.constants(i, c, 0, 0) = static_cast<T>(v.constants[c]);
    }
    return in;
}

template nn::StructuredInput<float> stack_conditioning<float>(std::span<const ConditioningVolume>);
template nn::StructuredInput<double> stack_conditioning<double>(std::span<const ConditioningVolume>);

ConditioningBatch::ConditioningBatch(int resolution, int layout_channels, int attribute_channels, int noise_dim)
    : attribute_channels_(attribute_channels), noise_dim_(noise_dim) {
    input_.resolution = resolution;
    input_.layout_channels = layout_channels;
}

void ConditioningBatch::resize(int batch) {
    input_.batch = batch;
    const std::size_t plane = static_cast<std::size_t>(input_.resolution) * input_.resolution;
    input_.labels.assign(input_.layout_channels > 0 ? plane * batch : 0, 0);
    const int k = attribute_channels_ + noise_dim_;
    input_.constants = k > 0 ? Tensor<float>(batch, k, 1, 1) : Tensor<float>();
}

void ConditioningBatch::set(int i, const data::SemanticLayout* layout, const data::AttributeVector* attributes,
                            std::span<const float> z) {
    const std::size_t plane = static_cast<std::size_t>(input_.resolution) * input_.resolution;
    if (input_.layout_channels > 0) {
        if (layout == nullptr || layout->hot_channels().size() != plane) {
            throw ValidationError("layout", "missing or wrongly sized layout");
        }
        std::copy(layout->hot_channels().begin(), layout->hot_channels().end(), input_.labels.begin() + i * plane);
    }
    if (attribute_channels_ > 0) {
        if (attributes == nullptr) throw ValidationError("attributes", "missing attribute vector");
        for (int k = 0; k < attribute_channels_; ++k) input_.constants(i, k, 0, 0) = (*attributes)[k];
    }
    if (static_cast<int>(z.size()) != noise_dim_) throw ValidationError("z", "wrong noise length");
    for (int k = 0; k < noise_dim_; ++k) input_.constants(i, attribute_channels_ + k, 0, 0) = z[k];
}

} // namespace alcgan::model
