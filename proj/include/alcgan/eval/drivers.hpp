#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "alcgan/data/manifest.hpp"
#include "alcgan/eval/grid.hpp"

namespace alcgan::eval {

struct SweepRequest {
    data::SemanticLayout layout;
    data::AttributeVector base;
    int attribute_index = 0;
    std::vector<double> strengths; // ascending, each in [0,1]
    std::uint64_t seed = 0;

    void validate() const;
};

/// One row: the base probe with slot `attribute_index` replaced by each
/// strength. Other slots are held fixed.
GridReport attribute_sweep(const model::Generator<float>& generator, const SweepRequest& request,
                           const ModelSource& source = {});

/// Rows vary the attributes, columns the noise seed; the layout is fixed.
GridReport noise_grid(const model::Generator<float>& generator, const data::SemanticLayout& layout,
                      std::span<const data::AttributeVector> rows, std::span<const std::uint64_t> seeds,
                      const ModelSource& source = {}, const std::vector<std::string>& row_labels = {});

enum class EditOp { Add, Remove };

struct LayoutEdit {
    std::vector<std::uint8_t> mask; // H*W, nonzero = inside the region
    int label = 0;
    EditOp op = EditOp::Add;
};

/// Editing state for one layout. Each pixel keeps a stack of the labels it
/// held before every add, so a remove restores what an add covered; pixels
/// with nothing left to restore fall back to `background`.
class LayoutEditor {
public:
    explicit LayoutEditor(data::SemanticLayout initial, int background = data::kUnlabeled);

    /// Add: region pixels take `label`. Remove: region pixels currently
    /// holding `label` go back to their previous label.
    void apply(const LayoutEdit& edit);
    const data::SemanticLayout& layout() const noexcept { return layout_; }

private:
    data::SemanticLayout layout_;
    int background_;
    std::vector<std::vector<std::uint8_t>> history_;
};

/// The layout after each edit, preceded by the original:
/// {original, after edit 0, after edit 1, ...}. Errors name "edits[i].<field>".
std::vector<data::SemanticLayout> apply_edit_script(const data::SemanticLayout& layout,
                                                    std::span<const LayoutEdit> script,
                                                    int background = data::kUnlabeled);

/// Reads a JSON list of {mask_png | mask, class, op}. mask_png paths resolve
/// against the script's directory; mask is an inline base64 PNG. Nonzero mask
/// pixels are selected. class may be a canonical name or an index.
std::vector<LayoutEdit> load_edit_script(const std::filesystem::path& path, int resolution);
std::vector<LayoutEdit> parse_edit_script(const nlohmann::json& doc, const std::filesystem::path& base_dir,
                                          int resolution);

struct NearestMatch {
    std::size_t index = 0;
    double distance = 0.0; // sum of absolute differences over [-1,1] pixels
};

double l1_distance(const data::Image& a, const data::Image& b);
/// Exhaustive scan; ties keep the earliest sample.
NearestMatch nearest_training_image(const data::Image& query, std::span<const data::SceneSample> samples);
/// Streams the manifest's images one at a time.
NearestMatch nearest_training_image(const data::Image& query, const data::DatasetManifest& manifest);

} // namespace alcgan::eval
