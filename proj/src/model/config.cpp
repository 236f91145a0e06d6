#include "alcgan/model/config.hpp"

#include <bit>
#include <cmath>

#include "alcgan/error.hpp"

namespace alcgan::model {

namespace {

const std::vector<int> kEncoderWidths{128, 256, 512, 1024};
const std::vector<int> kDecoderHidden{512, 256, 128};

int scale_width(int nominal, double multiplier) {
    return std::max(1, static_cast<int>(std::lround(nominal * multiplier)));
}

void require(bool ok, const std::string& field, const std::string& message) {
    if (!ok) throw ValidationError(field, message);
}

} // namespace

std::string to_string(VariantKind kind) {
    switch (kind) {
    case VariantKind::AL:
        return "AL";
    case VariantKind::A_ONLY:
        return "A_ONLY";
    case VariantKind::L_ONLY:
        return "L_ONLY";
    }
    return "AL";
}

VariantKind parse_variant(std::string_view text) {
    if (text == "AL" || text == "AL-CGAN") return VariantKind::AL;
    if (text == "A_ONLY" || text == "A-CGAN") return VariantKind::A_ONLY;
    if (text == "L_ONLY" || text == "L-CGAN") return VariantKind::L_ONLY;
    throw ValidationError("variant", "unknown variant '" + std::string(text) + "'");
}

int GeneratorConfig::width(int nominal) const { return scale_width(nominal, channel_multiplier); }

void GeneratorConfig::validate() const {
    require(resolution > 0, "generator.resolution", "must be positive");
    require(layout_channels >= 0 && attribute_channels >= 0 && noise_dim >= 0, "generator", "negative channel count");
    require(input_channels() > 0, "generator", "no input channels");
    require(kernel_size > 0 && kernel_size % 2 == 1, "generator.kernel_size", "must be odd");
    require(channel_multiplier > 0.0, "generator.channel_multiplier", "must be positive");
    require(!deconv_channels.empty(), "generator.deconv_channels", "need at least one decoder stage");
    require(conv_channels.size() == deconv_channels.size(), "generator",
            "encoder and decoder need the same number of stride-2 stages");
    require(deconv_channels.back() == 3, "generator.deconv_channels", "final layer must output 3 channels");
    require((resolution >> conv_channels.size()) << conv_channels.size() == resolution && bottleneck_size() >= 1,
            "generator.resolution", "must be divisible by 2^stages");
    for (int c : conv_channels) require(c > 0, "generator.conv_channels", "widths must be positive");
    for (int c : deconv_channels) require(c > 0, "generator.deconv_channels", "widths must be positive");
}

nlohmann::json GeneratorConfig::to_json() const {
    return {{"resolution", resolution},
            {"layout_channels", layout_channels},
            {"attribute_channels", attribute_channels},
            {"noise_dim", noise_dim},
            {"kernel_size", kernel_size},
            {"conv_channels", conv_channels},
            {"deconv_channels", deconv_channels},
            {"channel_multiplier", channel_multiplier}};
}

GeneratorConfig GeneratorConfig::from_json(const nlohmann::json& j) {
    GeneratorConfig c;
    try {
        c.resolution = j.value("resolution", c.resolution);
        c.layout_channels = j.value("layout_channels", c.layout_channels);
        c.attribute_channels = j.value("attribute_channels", c.attribute_channels);
        c.noise_dim = j.value("noise_dim", c.noise_dim);
        c.kernel_size = j.value("kernel_size", c.kernel_size);
        c.conv_channels = j.value("conv_channels", c.conv_channels);
        c.deconv_channels = j.value("deconv_channels", c.deconv_channels);
        c.channel_multiplier = j.value("channel_multiplier", c.channel_multiplier);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("generator", e.what());
    }
    c.validate();
    return c;
}

int DiscriminatorConfig::width(int nominal) const { return scale_width(nominal, channel_multiplier); }

void DiscriminatorConfig::validate() const {
    require(resolution > 0, "discriminator.resolution", "must be positive");
    require(layout_channels >= 0 && attribute_channels >= 0, "discriminator", "negative channel count");
    require(condition_channels() > 0, "discriminator", "attribute-layout branch has no input");
    require(image_channels > 0, "discriminator.image_channels", "must be positive");
    require(kernel_size > 0 && kernel_size % 2 == 1, "discriminator.kernel_size", "must be odd");
    require(channel_multiplier > 0.0, "discriminator.channel_multiplier", "must be positive");
    require((resolution >> branch_channels.size()) << branch_channels.size() == resolution && bottleneck_size() >= 1,
            "discriminator.resolution", "must be divisible by 2^stages");
    require(fusion_channels > 0, "discriminator.fusion_channels", "must be positive");
    require(fc_hidden >= 0, "discriminator.fc_hidden", "must be non-negative");
    for (int c : branch_channels) require(c > 0, "discriminator.branch_channels", "widths must be positive");
}

nlohmann::json DiscriminatorConfig::to_json() const {
    return {{"resolution", resolution},
            {"layout_channels", layout_channels},
            {"attribute_channels", attribute_channels},
            {"image_channels", image_channels},
            {"kernel_size", kernel_size},
            {"branch_channels", branch_channels},
            {"fusion_channels", fusion_channels},
            {"fc_hidden", fc_hidden},
            {"channel_multiplier", channel_multiplier},
            {"leaky_slope", leaky_slope}};
}

DiscriminatorConfig DiscriminatorConfig::from_json(const nlohmann::json& j) {
    DiscriminatorConfig c;
    try {
        c.resolution = j.value("resolution", c.resolution);
        c.layout_channels = j.value("layout_channels", c.layout_channels);
        c.attribute_channels = j.value("attribute_channels", c.attribute_channels);
        c.image_channels = j.value("image_channels", c.image_channels);
        c.kernel_size = j.value("kernel_size", c.kernel_size);
        c.branch_channels = j.value("branch_channels", c.branch_channels);
        c.fusion_channels = j.value("fusion_channels", c.fusion_channels);
        c.fc_hidden = j.value("fc_hidden", c.fc_hidden);
        c.channel_multiplier = j.value("channel_multiplier", c.channel_multiplier);
        c.leaky_slope = j.value("leaky_slope", c.leaky_slope);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("discriminator", e.what());
    }
    c.validate();
    return c;
}

nlohmann::json ModelConfig::to_json() const {
    return {{"generator", generator.to_json()},
            {"discriminator", discriminator.to_json()},
            {"variant", to_string(variant)}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ValidationError("model", "must be an object");
    ModelConfig m;
    m.generator = GeneratorConfig::from_json(j.value("generator", nlohmann::json::object()));
    m.discriminator = DiscriminatorConfig::from_json(j.value("discriminator", nlohmann::json::object()));
    m.variant = parse_variant(j.value("variant", std::string("AL")));
    return m;
}

ModelConfig default_model_config() { return scaled_model_config(128, 1.0, 8); }

ModelConfig scaled_model_config(int resolution, double multiplier, int bottleneck) {
    require(resolution > 0 && bottleneck > 0 && resolution % bottleneck == 0 &&
                std::has_single_bit(static_cast<unsigned>(resolution / bottleneck)),
            "resolution", "resolution / bottleneck must be a power of two");
    const int stages = std::countr_zero(static_cast<unsigned>(resolution / bottleneck));
    require(stages >= 1 && stages <= static_cast<int>(kEncoderWidths.size()), "resolution",
            "supported stage counts are 1..4");

    ModelConfig m;
    auto& g = m.generator;
    g.resolution = resolution;
    g.channel_multiplier = multiplier;
    g.conv_channels.assign(kEncoderWidths.begin(), kEncoderWidths.begin() + stages);
    g.deconv_channels.assign(kDecoderHidden.end() - (stages - 1), kDecoderHidden.end());
    g.deconv_channels.push_back(3);

    auto& d = m.discriminator;
    d.resolution = resolution;
    d.channel_multiplier = multiplier;
    d.branch_channels.assign(kEncoderWidths.begin(), kEncoderWidths.begin() + stages);
    d.fusion_channels = 2 * d.branch_channels.back();
    m.variant = VariantKind::AL;
    g.validate();
    d.validate();
    return m;
}

ModelConfig make_variant(VariantKind kind, GeneratorConfig generator, DiscriminatorConfig discriminator) {
    if (kind == VariantKind::A_ONLY) generator.layout_channels = discriminator.layout_channels = 0;
    if (kind == VariantKind::L_ONLY) generator.attribute_channels = discriminator.attribute_channels = 0;
    return ModelConfig{generator, discriminator, kind};
}

std::vector<LayerInfo> generator_layers(const GeneratorConfig& c) {
    c.validate();
    std::vector<LayerInfo> layers;
    int size = c.resolution;
    int channels = c.input_channels();
    layers.push_back({"conv1", size, channels, channels, c.kernel_size, 1, size, true, "relu"});
    for (std::size_t i = 0; i < c.conv_channels.size(); ++i) {
        const int out = c.width(c.conv_channels[i]);
        layers.push_back({"conv" + std::to_string(i + 2), size, channels, out, c.kernel_size, 2, size / 2, true,
                          "relu"});
        size /= 2;
        channels = out;
    }
    for (std::size_t i = 0; i < c.deconv_channels.size(); ++i) {
        const bool last = i + 1 == c.deconv_channels.size();
        const int out = last ? c.deconv_channels[i] : c.width(c.deconv_channels[i]);
        layers.push_back({"deconv" + std::to_string(i + 1), size, channels, out, c.kernel_size, 2, size * 2, !last,
                          last ? "tanh" : "relu"});
        size *= 2;
        channels = out;
    }
    return layers;
}

std::vector<LayerInfo> discriminator_layers(const DiscriminatorConfig& c) {
    c.validate();
    std::vector<LayerInfo> layers;
    auto branch = [&](const std::string& tag, int in_channels, bool first_bn) {
        int size = c.resolution;
        layers.push_back({tag + ".conv1", size, in_channels, in_channels, c.kernel_size, 1, size, first_bn, "lrelu"});
        int channels = in_channels;
        for (std::size_t i = 0; i < c.branch_channels.size(); ++i) {
            const int out = c.width(c.branch_channels[i]);
            layers.push_back({tag + ".conv" + std::to_string(i + 2), size, channels, out, c.kernel_size, 2, size / 2,
                              true, "lrelu"});
            size /= 2;
            channels = out;
        }
        return channels;
    };
    const int al_out = branch("al", c.condition_channels(), true);
    const int img_out = branch("img", c.image_channels, false);
    const int b = c.bottleneck_size();
    const int fused = c.width(c.fusion_channels);
    layers.push_back({"conv6", b, al_out + img_out, fused, 1, 1, b, true, "lrelu"});
    int features = fused * b * b;
    if (c.fc_hidden > 0) {
        layers.push_back({"fc_hidden", 1, features, c.width(c.fc_hidden), 1, 1, 1, false, "lrelu"});
        features = c.width(c.fc_hidden);
    }
    layers.push_back({"fc", 1, features, 1, 1, 1, 1, false, "sigmoid"});
    return layers;
}

} // namespace alcgan::model
