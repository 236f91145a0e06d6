#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "alcgan/data/attributes.hpp"
#include "alcgan/data/image.hpp"
#include "alcgan/data/layout.hpp"

namespace alcgan::data {

/// One training example held in memory.
struct SceneSample {
    Image image;
    SemanticLayout layout;
    AttributeVector attributes;
    std::string group_id;
    std::string source_path;
};

/// One manifest line. Paths are stored as written; they resolve against the
/// manifest's directory. `layout` may be absent for webcam frames whose group
/// layout is filled in by propagate_webcam_layout.
struct ManifestRecord {
    std::string image;
    std::optional<std::string> layout;
    AttributeVector attributes;
    std::string group_id;
    int line = 0;
};

struct ManifestOptions {
    int resolution = 128;
    double coverage_threshold = 0.7;
};

struct DatasetManifest {
    std::filesystem::path base_dir;
    std::vector<ManifestRecord> records;
    int resolution = 128;
    double coverage_threshold = 0.7;
    std::size_t excluded = 0; // records dropped by the coverage filter

    std::filesystem::path resolve(const std::string& relative) const;
};

/// Parses a JSON-lines manifest ({image, layout, attributes[40], group_id} per
/// line), checks every referenced file exists and drops annotated records whose
/// labeled-pixel fraction (after preprocessing) is below the threshold.
DatasetManifest load_manifest(const std::filesystem::path& path, const ManifestOptions& options = {});

/// Gives every record in a group the layout of the group's first annotated
/// record (manifest order). Throws ValidationError naming a group without one.
DatasetManifest propagate_webcam_layout(DatasetManifest manifest);

/// Decodes and preprocesses one record to the manifest resolution.
SceneSample load_sample(const DatasetManifest& manifest, std::size_t index);
/// All records, in manifest order. Throws if any record still lacks a layout.
std::vector<SceneSample> load_samples(const DatasetManifest& manifest);

/// Writes records as JSON lines.
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestRecord>& records);

} // namespace alcgan::data
