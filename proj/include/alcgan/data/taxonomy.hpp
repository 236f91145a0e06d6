#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace alcgan::data {

inline constexpr int kSemanticLabels = 18;
inline constexpr int kLayoutChannels = 19;
inline constexpr int kUnlabeled = 18;

/// The 18 canonical outdoor labels in channel order. Channel 18 is "unlabeled".
/// This order is part of the checkpoint contract.
const std::array<std::string_view, kSemanticLabels>& canonical_label_names();

struct PaletteColor {
    std::uint8_t r, g, b;
};

/// Display colors used when writing indexed layout PNGs (one per channel).
const std::array<PaletteColor, kLayoutChannels>& layout_palette();

/// Maps raw dataset label strings onto the 18 canonical labels plus unlabeled.
///
/// Matching is case-insensitive and ignores surrounding whitespace. Canonical
/// names always map to themselves; everything not listed in the synonym table
/// maps to the unlabeled channel.
class LabelTaxonomy {
public:
    /// Canonical names plus the merges seeded by default
    /// (skyscraper/tower/house -> building).
    static LabelTaxonomy standard();
    /// Reads {"synonyms": {"raw": "canonical" | "unlabeled", ...}}.
    static LabelTaxonomy from_json(const nlohmann::json& doc);
    static LabelTaxonomy load(const std::filesystem::path& path);

    int canonicalize(std::string_view raw) const;
    /// Index of a canonical name (or "unlabeled"); throws ValidationError otherwise.
    int index_of(std::string_view canonical) const;

    std::vector<std::string> canonical_labels() const;
    /// 19 names, the canonical labels followed by "unlabeled".
    std::vector<std::string> channel_names() const;
    int unlabeled_index() const noexcept { return kUnlabeled; }
    const std::unordered_map<std::string, int>& synonyms() const noexcept { return synonyms_; }

private:
    std::unordered_map<std::string, int> synonyms_;
};

int canonicalize_label(std::string_view raw, const LabelTaxonomy& taxonomy);

} // namespace alcgan::data
