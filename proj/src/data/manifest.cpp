#include "alcgan/data/manifest.hpp"

#include <fstream>
#include <unordered_map>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "alcgan/data/png_io.hpp"
#include "alcgan/error.hpp"

namespace alcgan::data {

namespace fs = std::filesystem;

fs::path DatasetManifest::resolve(const std::string& relative) const {
    const fs::path p(relative);
    return p.is_absolute() ? p : base_dir / p;
}

namespace {

ManifestRecord parse_record(const nlohmann::json& j, int line) {
    const std::string where = "record " + std::to_string(line);
    if (!j.is_object()) throw ValidationError(where, "must be a JSON object");
    ManifestRecord r;
    r.line = line;
    if (!j.contains("image") || !j["image"].is_string()) throw ValidationError(where + ".image", "missing path");
    r.image = j["image"].get<std::string>();
    if (j.contains("layout") && !j["layout"].is_null()) {
        if (!j["layout"].is_string()) throw ValidationError(where + ".layout", "must be a path");
        r.layout = j["layout"].get<std::string>();
    }
    if (!j.contains("attributes")) throw ValidationError(where + ".attributes", "missing");
    r.attributes = AttributeVector::from_json(j["attributes"], where + ".attributes");
    if (!j.contains("group_id") || !j["group_id"].is_string()) {
        throw ValidationError(where + ".group_id", "missing string");
    }
    r.group_id = j["group_id"].get<std::string>();
    return r;
}

} // namespace

DatasetManifest load_manifest(const fs::path& path, const ManifestOptions& options) {
    if (options.coverage_threshold < 0.0 || options.coverage_threshold > 1.0) {
        throw ValidationError("coverage_threshold", "must lie in [0,1]");
    }
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest " + path.string());

    DatasetManifest manifest;
    manifest.base_dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
    manifest.resolution = options.resolution;
    manifest.coverage_threshold = options.coverage_threshold;

    std::string text;
    int line = 0;
    while (std::getline(in, text)) {
        ++line;
        if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(text);
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError("record " + std::to_string(line), std::string("malformed JSON: ") + e.what());
        }
        ManifestRecord r = parse_record(j, line);
        const std::string where = "record " + std::to_string(line);
        if (!fs::exists(manifest.resolve(r.image))) {
            throw IoError(where + ": missing image " + manifest.resolve(r.image).string());
        }
        if (r.layout) {
            const fs::path layout_path = manifest.resolve(*r.layout);
            if (!fs::exists(layout_path)) throw IoError(where + ": missing layout " + layout_path.string());
            const auto layout = encode_layout(preprocess_index_map(read_png_indexed(layout_path), options.resolution));
            if (layout.labeled_fraction() < options.coverage_threshold) {
                ++manifest.excluded;
                continue;
            }
        }
        manifest.records.push_back(std::move(r));
    }
    if (manifest.excluded > 0) {
        spdlog::info("manifest {}: {} record(s) below coverage threshold {:.2f} excluded", path.string(),
                     manifest.excluded, options.coverage_threshold);
    }
    return manifest;
}

DatasetManifest propagate_webcam_layout(DatasetManifest manifest) {
    std::unordered_map<std::string, std::string> group_layout;
    std::vector<std::string> group_order;
    for (const auto& r : manifest.records) {
        if (!group_layout.contains(r.group_id)) group_order.push_back(r.group_id);
        auto& slot = group_layout[r.group_id];
        if (slot.empty() && r.layout) slot = *r.layout;
    }
    for (const auto& g : group_order) {
        if (group_layout[g].empty()) throw ValidationError("group " + g, "no annotated layout in group");
    }
    for (auto& r : manifest.records) r.layout = group_layout[r.group_id];
    return manifest;
}

SceneSample load_sample(const DatasetManifest& manifest, std::size_t index) {
    const ManifestRecord& r = manifest.records.at(index);
    if (!r.layout) throw ValidationError("record " + std::to_string(r.line) + ".layout", "no layout (propagate first)");
    SceneSample s;
    s.source_path = manifest.resolve(r.image).string();
    s.image = preprocess_image(read_png_rgb(s.source_path), manifest.resolution);
    s.layout = encode_layout(preprocess_index_map(read_png_indexed(manifest.resolve(*r.layout)), manifest.resolution));
    s.attributes = r.attributes;
    s.group_id = r.group_id;
    return s;
}

std::vector<SceneSample> load_samples(const DatasetManifest& manifest) {
    std::vector<SceneSample> out;
    out.reserve(manifest.records.size());
    for (std::size_t i = 0; i < manifest.records.size(); ++i) out.push_back(load_sample(manifest, i));
    return out;
}

void write_manifest(const fs::path& path, const std::vector<ManifestRecord>& records) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw IoError("cannot write manifest " + path.string());
    for (const auto& r : records) {
        nlohmann::json j;
        j["image"] = r.image;
        if (r.layout) j["layout"] = *r.layout;
        j["attributes"] = r.attributes.to_json();
        j["group_id"] = r.group_id;
        out << j.dump() << '\n';
    }
}

} // namespace alcgan::data
