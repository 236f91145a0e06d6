#include "alcgan/data/toy.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "alcgan/data/taxonomy.hpp"
#include "alcgan/error.hpp"

namespace alcgan::data {

int ToySceneSpec::class_slot(int label) const noexcept {
    for (int j = 0; j < class_count(); ++j) {
        if (classes[j] == label) return j;
    }
    return -1;
}

ToySceneSpec ToySceneSpec::defaults() {
    ToySceneSpec s;
    s.resolution = 32;
    s.classes = {0, 8, 11, 1};    // sky, ground, water, building
    s.attributes = {2, 3, 6, 7}; // night, sunrisesunset, clouds, fog
    s.base_colors = {
        {-0.3f, 0.1f, 0.7f},   // sky
        {0.1f, -0.1f, -0.4f},  // ground
        {-0.6f, -0.2f, 0.3f},  // water
        {0.3f, -0.2f, -0.3f},  // building
    };
    s.attribute_effects = {
        // night
        {{-0.6f, -0.6f, -0.7f}, {-0.5f, -0.4f, -0.3f}, {-0.3f, -0.3f, -0.5f}, {-0.5f, -0.3f, -0.2f}},
        // sunset
        {{0.5f, -0.1f, -0.6f}, {0.2f, 0.0f, -0.1f}, {0.3f, 0.0f, -0.3f}, {0.1f, -0.1f, -0.2f}},
        // clouds
        {{0.3f, 0.2f, -0.2f}, {-0.1f, -0.1f, -0.1f}, {-0.1f, -0.1f, -0.1f}, {-0.1f, -0.1f, -0.1f}},
        // fog
        {{0.3f, 0.3f, 0.0f}, {0.3f, 0.4f, 0.5f}, {0.4f, 0.3f, 0.1f}, {0.2f, 0.4f, 0.4f}},
    };
    s.noise_sigma = 0.02;
    return s;
}

namespace {

Rgb rgb_from_json(const nlohmann::json& j, const std::string& field) {
    if (!j.is_array() || j.size() != 3) throw ValidationError(field, "expected [r,g,b]");
    Rgb c{};
    for (int i = 0; i < 3; ++i) {
        if (!j[i].is_number()) throw ValidationError(field, "expected numbers");
        c[i] = j[i].get<float>();
    }
    return c;
}

} // namespace

ToySceneSpec ToySceneSpec::from_json(const nlohmann::json& doc) {
    ToySceneSpec s;
    try {
        s.resolution = doc.value("resolution", 32);
        s.classes = doc.at("classes").get<std::vector<int>>();
        s.attributes = doc.at("attributes").get<std::vector<int>>();
        s.noise_sigma = doc.value("noise_sigma", 0.02);
        for (std::size_t j = 0; j < doc.at("base_colors").size(); ++j) {
            s.base_colors.push_back(rgb_from_json(doc["base_colors"][j], "base_colors[" + std::to_string(j) + "]"));
        }
        const auto& effects = doc.at("attribute_effects");
        for (std::size_t k = 0; k < effects.size(); ++k) {
            std::vector<Rgb> row;
            for (std::size_t j = 0; j < effects[k].size(); ++j) {
                row.push_back(rgb_from_json(effects[k][j], "attribute_effects[" + std::to_string(k) + "][" +
                                                               std::to_string(j) + "]"));
            }
            s.attribute_effects.push_back(std::move(row));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("toy_spec", e.what());
    }
    s.validate();
    return s;
}

nlohmann::json ToySceneSpec::to_json() const {
    nlohmann::json j;
    j["resolution"] = resolution;
    j["classes"] = classes;
    j["attributes"] = attributes;
    j["noise_sigma"] = noise_sigma;
    j["base_colors"] = base_colors;
    j["attribute_effects"] = attribute_effects;
    return j;
}

void ToySceneSpec::validate() const {
    if (resolution < 4) throw ValidationError("resolution", "must be at least 4");
    if (classes.empty() || class_count() > kLayoutChannels) throw ValidationError("classes", "need 1..19 classes");
    if (attribute_count() > kAttributeCount) throw ValidationError("attributes", "at most 40 attributes");
    for (int j = 0; j < class_count(); ++j) {
        if (classes[j] < 0 || classes[j] >= kLayoutChannels) {
            throw ValidationError("classes[" + std::to_string(j) + "]", "label index outside [0,18]");
        }
        for (int i = 0; i < j; ++i) {
            if (classes[i] == classes[j]) throw ValidationError("classes[" + std::to_string(j) + "]", "duplicate");
        }
    }
    for (int k = 0; k < attribute_count(); ++k) {
        if (attributes[k] < 0 || attributes[k] >= kAttributeCount) {
            throw ValidationError("attributes[" + std::to_string(k) + "]", "slot outside [0,39]");
        }
    }
    if (static_cast<int>(base_colors.size()) != class_count()) {
        throw ValidationError("base_colors", "need one color per class");
    }
    for (std::size_t j = 0; j < base_colors.size(); ++j) {
        for (float v : base_colors[j]) {
            if (!(v >= -1.0f && v <= 1.0f)) {
                throw ValidationError("base_colors[" + std::to_string(j) + "]", "must lie in [-1,1]");
            }
        }
    }
    if (static_cast<int>(attribute_effects.size()) != attribute_count()) {
        throw ValidationError("attribute_effects", "need one row per attribute");
    }
    for (std::size_t k = 0; k < attribute_effects.size(); ++k) {
        if (static_cast<int>(attribute_effects[k].size()) != class_count()) {
            throw ValidationError("attribute_effects[" + std::to_string(k) + "]", "need one effect per class");
        }
    }
    if (!(noise_sigma >= 0.0)) throw ValidationError("noise_sigma", "must be non-negative");
}

Image render_toy(const SemanticLayout& layout, const AttributeVector& attributes, const ToySceneSpec& spec) {
    // Per-class color table, then a lookup per pixel.
    std::vector<Rgb> table(kLayoutChannels);
    std::vector<bool> known(kLayoutChannels, false);
    for (int j = 0; j < spec.class_count(); ++j) {
        Rgb c = spec.base_colors[j];
        for (int k = 0; k < spec.attribute_count(); ++k) {
            const float a = attributes[spec.attributes[k]];
            for (int ch = 0; ch < 3; ++ch) c[ch] += a * spec.attribute_effects[k][j][ch];
        }
        for (float& v : c) v = std::clamp(v, -1.0f, 1.0f);
        table[spec.classes[j]] = c;
        known[spec.classes[j]] = true;
    }
    Image out(layout.height(), layout.width());
    for (int y = 0; y < layout.height(); ++y) {
        for (int x = 0; x < layout.width(); ++x) {
            const int label = layout.label(y, x);
            if (!known[label]) {
                throw ValidationError("layout[" + std::to_string(y) + "," + std::to_string(x) + "]",
                                      "class " + std::to_string(label) + " is not part of the toy spec");
            }
            for (int ch = 0; ch < 3; ++ch) out.at(ch, y, x) = table[label][ch];
        }
    }
    return out;
}

SemanticLayout random_toy_layout(const ToySceneSpec& spec, std::mt19937_64& rng) {
    const int r = spec.resolution;
    auto uniform_int = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    const int n_ground = spec.class_count() - 1;
    auto ground_class = [&]() {
        return n_ground == 0 ? spec.classes[0] : spec.classes[1 + uniform_int(0, n_ground - 1)];
    };

    IndexMap map(r, r, static_cast<std::uint8_t>(spec.classes[0]));
    const int horizon = uniform_int(r / 4, (3 * r) / 4);

    auto fill = [&](int y0, int y1, int x0, int x1, int label) {
        for (int y = y0; y < y1; ++y)
            for (int x = x0; x < x1; ++x) map.at(y, x) = static_cast<std::uint8_t>(label);
    };

    switch (uniform_int(0, 2)) {
    case 0:
        fill(horizon, r, 0, r, ground_class());
        break;
    case 1: {
        const int cut = uniform_int(r / 4, (3 * r) / 4);
        fill(horizon, r, 0, cut, ground_class());
        fill(horizon, r, cut, r, ground_class());
        break;
    }
    default: {
        const int cut = horizon + std::max(1, (r - horizon) / 2);
        const int vcut = uniform_int(r / 4, (3 * r) / 4);
        fill(horizon, cut, 0, r, ground_class());
        fill(cut, r, 0, vcut, ground_class());
        fill(cut, r, vcut, r, ground_class());
        break;
    }
    }

    // A block standing on the horizon; the band above it stays sky.
    if (n_ground > 0 && uniform_int(0, 1) == 1 && horizon > r / 4) {
        const int width = uniform_int(std::max(1, r / 8), std::max(1, r / 3));
        const int x0 = uniform_int(0, r - width);
        const int top = uniform_int(r / 8, horizon - 1);
        fill(top, horizon, x0, x0 + width, ground_class());
    }
    return encode_layout(map);
}

AttributeVector random_toy_attributes(const ToySceneSpec& spec, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    AttributeVector a;
    for (int slot : spec.attributes) a.set(slot, unit(rng));
    return a;
}

std::vector<SceneSample> generate_toy_dataset(const ToySceneSpec& spec, int n, std::uint64_t seed) {
    if (n <= 0) throw ValidationError("n", "sample count must be positive");
    spec.validate();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<SceneSample> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
        SceneSample s;
        s.layout = random_toy_layout(spec, rng);
        s.attributes = random_toy_attributes(spec, rng);
        s.image = render_toy(s.layout, s.attributes, spec);
        if (spec.noise_sigma > 0.0) {
            for (float& v : s.image.pixels) {
                v = static_cast<float>(std::clamp(v + spec.noise_sigma * noise(rng), -1.0, 1.0));
            }
        }
        s.group_id = "toy-" + std::to_string(i);
        s.source_path = "toy://" + std::to_string(seed) + "/" + std::to_string(i);
        out.push_back(std::move(s));
    }
    return out;
}

} // namespace alcgan::data
