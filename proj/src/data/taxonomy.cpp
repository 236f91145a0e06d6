#include "alcgan/data/taxonomy.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "alcgan/error.hpp"

namespace alcgan::data {

namespace {

std::string normalize(std::string_view raw) {
    auto begin = raw.begin();
    auto end = raw.end();
    while (begin != end && std::isspace(static_cast<unsigned char>(*begin))) ++begin;
    while (end != begin && std::isspace(static_cast<unsigned char>(*(end - 1)))) --end;
    std::string out(begin, end);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

int canonical_index(std::string_view name) {
    const auto& names = canonical_label_names();
    for (int i = 0; i < kSemanticLabels; ++i) {
        if (names[i] == name) return i;
    }
    if (name == "unlabeled") return kUnlabeled;
    return -1;
}

} // namespace

const std::array<std::string_view, kSemanticLabels>& canonical_label_names() {
    static constexpr std::array<std::string_view, kSemanticLabels> names{
        "sky",  "building", "grass", "tree",  "mountain", "rock", "road",  "field",     "ground",
        "earth", "sea",     "water", "plant", "roof",     "city", "village", "cityscape", "hill"};
    return names;
}

const std::array<PaletteColor, kLayoutChannels>& layout_palette() {
    static constexpr std::array<PaletteColor, kLayoutChannels> palette{{
        {70, 130, 180},  // sky
        {180, 70, 60},   // building
        {120, 200, 80},  // grass
        {30, 120, 40},   // tree
        {140, 110, 90},  // mountain
        {110, 110, 110}, // rock
        {90, 90, 100},   // road
        {200, 190, 90},  // field
        {150, 120, 70},  // ground
        {120, 80, 40},   // earth
        {20, 60, 160},   // sea
        {60, 160, 220},  // water
        {90, 170, 60},   // plant
        {160, 40, 40},   // roof
        {200, 150, 200}, // city
        {220, 180, 140}, // village
        {170, 120, 180}, // cityscape
        {100, 140, 60},  // hill
        {0, 0, 0},       // unlabeled
    }};
    return palette;
}

LabelTaxonomy LabelTaxonomy::standard() {
    LabelTaxonomy t;
    const int building = canonical_index("building");
    for (const char* raw : {"skyscraper", "tower", "house"}) t.synonyms_[raw] = building;
    return t;
}

LabelTaxonomy LabelTaxonomy::from_json(const nlohmann::json& doc) {
    LabelTaxonomy t;
    if (!doc.is_object() || !doc.contains("synonyms") || !doc["synonyms"].is_object()) {
        throw ValidationError("synonyms", "taxonomy document needs a 'synonyms' object");
    }
    if (doc.contains("channels")) {
        // Optional echo of the channel order; it cannot be changed, only confirmed.
        const auto expected = t.channel_names();
        if (!doc["channels"].is_array() || doc["channels"].size() != expected.size()) {
            throw ValidationError("channels", "must list the 19 layout channels");
        }
        for (std::size_t i = 0; i < expected.size(); ++i) {
            if (!doc["channels"][i].is_string() || doc["channels"][i].get<std::string>() != expected[i]) {
                throw ValidationError("channels[" + std::to_string(i) + "]", "expected '" + expected[i] + "'");
            }
        }
    }
    for (const auto& [raw, target] : doc["synonyms"].items()) {
        if (!target.is_string()) throw ValidationError("synonyms." + raw, "target must be a label name");
        const int idx = canonical_index(normalize(target.get<std::string>()));
        if (idx < 0) {
            throw ValidationError("synonyms." + raw, "unknown canonical label '" + target.get<std::string>() + "'");
        }
        t.synonyms_[normalize(raw)] = idx;
    }
    return t;
}

LabelTaxonomy LabelTaxonomy::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open taxonomy file " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path.string(), e.what());
    }
    return from_json(doc);
}

int LabelTaxonomy::canonicalize(std::string_view raw) const {
    const std::string key = normalize(raw);
    if (const int idx = canonical_index(key); idx >= 0) return idx;
    if (auto it = synonyms_.find(key); it != synonyms_.end()) return it->second;
    return kUnlabeled;
}

int LabelTaxonomy::index_of(std::string_view canonical) const {
    const int idx = canonical_index(normalize(canonical));
    if (idx < 0) throw ValidationError("label", "'" + std::string(canonical) + "' is not a canonical label");
    return idx;
}

std::vector<std::string> LabelTaxonomy::canonical_labels() const {
    const auto& names = canonical_label_names();
    return {names.begin(), names.end()};
}

std::vector<std::string> LabelTaxonomy::channel_names() const {
    auto names = canonical_labels();
    names.emplace_back("unlabeled");
    return names;
}

int canonicalize_label(std::string_view raw, const LabelTaxonomy& taxonomy) {
    return taxonomy.canonicalize(raw);
}

} // namespace alcgan::data
