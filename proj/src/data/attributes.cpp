#include "alcgan/data/attributes.hpp"

#include <cmath>
#include <fstream>

#include "alcgan/error.hpp"

namespace alcgan::data {

AttributeNames AttributeNames::standard() {
    AttributeNames a;
    a.names_ = {"dirty",      "daylight",  "night",      "sunrisesunset", "dawndusk",   "sunny",    "clouds",
                "fog",        "storm",     "snow",       "warm",          "cold",       "busy",     "beautiful",
                "flowers",    "spring",    "summer",     "autumn",        "winter",     "glowing",  "colorful",
                "dull",       "rugged",    "midday",     "dark",          "bright",     "dry",      "moist",
                "windy",      "rain",      "ice",        "cluttered",     "soothing",   "stressful", "exciting",
                "sentimental", "mysterious", "boring",   "gloomy",        "lush"};
    return a;
}

AttributeNames AttributeNames::from_json(const nlohmann::json& doc) {
    if (!doc.is_object() || !doc.contains("attributes") || !doc["attributes"].is_array()) {
        throw ValidationError("attributes", "attribute name document needs an 'attributes' array");
    }
    const auto& arr = doc["attributes"];
    if (arr.size() != kAttributeCount) {
        throw ValidationError("attributes", "expected 40 names, got " + std::to_string(arr.size()));
    }
    AttributeNames a;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        if (!arr[i].is_string()) throw ValidationError("attributes[" + std::to_string(i) + "]", "must be a string");
        a.names_.push_back(arr[i].get<std::string>());
    }
    return a;
}

AttributeNames AttributeNames::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open attribute name file " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path.string(), e.what());
    }
    return from_json(doc);
}

int AttributeNames::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < names_.size(); ++i) {
        if (names_[i] == name) return static_cast<int>(i);
    }
    throw ValidationError("attribute", "unknown attribute '" + std::string(name) + "'");
}

AttributeVector AttributeVector::from_values(std::span<const double> values, const std::string& field) {
    if (values.size() != kAttributeCount) {
        throw ValidationError(field, "expected 40 values, got " + std::to_string(values.size()));
    }
    AttributeVector v;
    for (int k = 0; k < kAttributeCount; ++k) {
        const double x = values[k];
        if (!std::isfinite(x) || x < 0.0 || x > 1.0) {
            throw ValidationError(field + "[" + std::to_string(k) + "]", "must lie in [0,1]");
        }
        v.values_[k] = static_cast<float>(x);
    }
    return v;
}

AttributeVector AttributeVector::from_json(const nlohmann::json& array, const std::string& field) {
    if (!array.is_array()) throw ValidationError(field, "must be an array of 40 numbers");
    std::vector<double> values;
    values.reserve(array.size());
    for (std::size_t i = 0; i < array.size(); ++i) {
        if (!array[i].is_number()) {
            throw ValidationError(field + "[" + std::to_string(i) + "]", "must be a number");
        }
        values.push_back(array[i].get<double>());
    }
    return from_values(values, field);
}

void AttributeVector::set(int k, double value) {
    if (k < 0 || k >= kAttributeCount) throw ValidationError("attribute_index", "out of range");
    if (!std::isfinite(value) || value < 0.0 || value > 1.0) {
        throw ValidationError("attributes[" + std::to_string(k) + "]", "must lie in [0,1]");
    }
    values_[k] = static_cast<float>(value);
}

nlohmann::json AttributeVector::to_json() const {
    auto arr = nlohmann::json::array();
    for (float v : values_) arr.push_back(v);
    return arr;
}

} // namespace alcgan::data
