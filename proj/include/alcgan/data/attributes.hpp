#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace alcgan::data {

inline constexpr int kAttributeCount = 40;

/// Ordered names of the 40 transient attribute slots.
class AttributeNames {
public:
    /// The published Transient Attributes list in its dataset order.
    static AttributeNames standard();
    /// Reads {"attributes": [40 names]}.
    static AttributeNames from_json(const nlohmann::json& doc);
    static AttributeNames load(const std::filesystem::path& path);

    const std::vector<std::string>& names() const noexcept { return names_; }
    /// Throws ValidationError for unknown names.
    int index_of(std::string_view name) const;

private:
    std::vector<std::string> names_;
};

/// 40 attribute strengths, each in [0,1].
class AttributeVector {
public:
    AttributeVector() { values_.fill(0.0f); }

    /// Validates length and range; errors name the offending entry as "<field>[k]".
    static AttributeVector from_values(std::span<const double> values, const std::string& field = "attributes");
    static AttributeVector from_json(const nlohmann::json& array, const std::string& field = "attributes");

    float operator[](int k) const noexcept { return values_[k]; }
    /// Sets one slot; throws ValidationError if out of [0,1].
    void set(int k, double value);

    const std::array<float, kAttributeCount>& values() const noexcept { return values_; }
    nlohmann::json to_json() const;

    bool operator==(const AttributeVector&) const = default;

private:
    std::array<float, kAttributeCount> values_;
};

} // namespace alcgan::data
