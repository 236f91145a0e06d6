#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace alcgan::model {

/// Which conditioning signals are wired into both networks.
enum class VariantKind { AL, A_ONLY, L_ONLY };

std::string to_string(VariantKind kind);
/// Accepts "AL", "A_ONLY", "L_ONLY" (and the model names "AL-CGAN", "A-CGAN", "L-CGAN").
VariantKind parse_variant(std::string_view text);

/// Generator shape. The first layer is a stride-1 conv that keeps the input
/// channel count; each entry of `conv_channels` adds a stride-2 conv and each
/// entry of `deconv_channels` a stride-2 transposed conv. All hidden widths are
/// multiplied by `channel_multiplier`; the final 3 image channels are not.
struct GeneratorConfig {
    int resolution = 128;
    int layout_channels = 19;
    int attribute_channels = 40;
    int noise_dim = 100;
    int kernel_size = 5;
    std::vector<int> conv_channels{128, 256, 512, 1024};
    std::vector<int> deconv_channels{512, 256, 128, 3};
    double channel_multiplier = 1.0;

    int input_channels() const noexcept { return layout_channels + attribute_channels + noise_dim; }
    int width(int nominal) const;
    int bottleneck_size() const noexcept { return resolution >> conv_channels.size(); }

    void validate() const;
    nlohmann::json to_json() const;
    static GeneratorConfig from_json(const nlohmann::json& j);
};

/// Siamese discriminator shape: an attribute-layout branch and an image branch
/// with identical stride schedules, channel-concatenated and fused by a 1x1
/// conv, then a linear decision head (optionally behind one hidden layer).
/// Fusion and hidden widths are nominal, like the branch widths.
struct DiscriminatorConfig {
    int resolution = 128;
    int layout_channels = 19;
    int attribute_channels = 40;
    int image_channels = 3;
    int kernel_size = 5;
    std::vector<int> branch_channels{128, 256, 512, 1024};
    int fusion_channels = 2048;
    int fc_hidden = 0; // 0 = logit directly from the fused maps
    double channel_multiplier = 1.0;
    double leaky_slope = 0.2;

    int condition_channels() const noexcept { return layout_channels + attribute_channels; }
    int width(int nominal) const;
    int bottleneck_size() const noexcept { return resolution >> branch_channels.size(); }

    void validate() const;
    nlohmann::json to_json() const;
    static DiscriminatorConfig from_json(const nlohmann::json& j);
};

struct ModelConfig {
    GeneratorConfig generator;
    DiscriminatorConfig discriminator;
    VariantKind variant = VariantKind::AL;

    nlohmann::json to_json() const;
    static ModelConfig from_json(const nlohmann::json& j);
};

/// Full-size networks at 128 x 128 with the AL variant.
ModelConfig default_model_config();

/// Desk-scale networks: fewer stride-2 stages so the bottleneck stays at
/// `bottleneck` pixels, widths multiplied by `multiplier`. The encoder keeps
/// the shallowest stages of the full schedule and the decoder the stages
/// nearest the output; the nominal fusion width is twice the nominal branch
/// output width.
/// resolution 128 / multiplier 1 reproduces default_model_config().
ModelConfig scaled_model_config(int resolution, double multiplier, int bottleneck = 8);

/// Adjusts input channel counts of a full (AL) config pair for an ablation:
/// A_ONLY drops the layout channels, L_ONLY drops the attribute channels.
/// Layer widths are unchanged.
ModelConfig make_variant(VariantKind kind, GeneratorConfig generator, DiscriminatorConfig discriminator);

/// Static description of one layer, for shape introspection.
struct LayerInfo {
    std::string name;
    int input_size;
    int in_channels;
    int out_channels;
    int kernel;
    int stride;
    int output_size;
    bool batch_norm;
    std::string activation;
};

std::vector<LayerInfo> generator_layers(const GeneratorConfig& config);
std::vector<LayerInfo> discriminator_layers(const DiscriminatorConfig& config);

} // namespace alcgan::model
