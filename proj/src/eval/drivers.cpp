#include "alcgan/eval/drivers.hpp"

#include <cmath>
#include <fmt/format.h>
#include <fstream>

#include "alcgan/data/png_io.hpp"
#include "alcgan/data/taxonomy.hpp"
#include "alcgan/error.hpp"
#include "alcgan/eval/base64.hpp"

namespace alcgan::eval {

namespace fs = std::filesystem;

void SweepRequest::validate() const {
    if (attribute_index < 0 || attribute_index >= data::kAttributeCount) {
        throw ValidationError("attribute_index", "must lie in [0,39]");
    }
    if (strengths.empty()) throw ValidationError("strengths", "need at least one strength");
    for (std::size_t i = 0; i < strengths.size(); ++i) {
        const std::string field = "strengths[" + std::to_string(i) + "]";
        if (!(strengths[i] >= 0.0 && strengths[i] <= 1.0)) throw ValidationError(field, "must lie in [0,1]");
        if (i > 0 && strengths[i] < strengths[i - 1]) throw ValidationError(field, "strengths must be ascending");
    }
}

GridReport attribute_sweep(const model::Generator<float>& generator, const SweepRequest& request,
                           const ModelSource& source) {
    request.validate();
    require_finite_weights(generator);
    GridReport r;
    r.kind = "attribute_sweep";
    r.rows = 1;
    r.cols = static_cast<int>(request.strengths.size());
    r.sources = {source};
    r.row_labels = {source.label.empty() ? "sweep" : source.label};
    for (double s : request.strengths) {
        GridCell c;
        c.probe = {request.layout, request.base, request.seed};
        c.probe.attributes.set(request.attribute_index, s);
        c.image = generate_image(generator, c.probe);
        r.cells.push_back(std::move(c));
        r.col_labels.push_back(fmt::format("{:.2f}", s));
    }
    r.parameters = {{"attribute_index", request.attribute_index},
                    {"strengths", request.strengths},
                    {"seed", request.seed}};
    return r;
}

GridReport noise_grid(const model::Generator<float>& generator, const data::SemanticLayout& layout,
                      std::span<const data::AttributeVector> rows, std::span<const std::uint64_t> seeds,
                      const ModelSource& source, const std::vector<std::string>& row_labels) {
    if (rows.empty()) throw ValidationError("rows", "need at least one attribute row");
    if (seeds.empty()) throw ValidationError("seeds", "need at least one seed");
    if (!row_labels.empty() && row_labels.size() != rows.size()) {
        throw ValidationError("row_labels", "one label per attribute row");
    }
    require_finite_weights(generator);
    GridReport r;
    r.kind = "noise_grid";
    r.rows = static_cast<int>(rows.size());
    r.cols = static_cast<int>(seeds.size());
    r.sources = {source};
    r.row_labels = row_labels;
    for (std::uint64_t s : seeds) r.col_labels.push_back("z=" + std::to_string(s));
    for (const auto& a : rows) {
        for (std::uint64_t s : seeds) {
            GridCell c;
            c.probe = {layout, a, s};
            c.image = generate_image(generator, c.probe);
            r.cells.push_back(std::move(c));
        }
    }
    r.parameters = {{"seeds", std::vector<std::uint64_t>(seeds.begin(), seeds.end())}};
    return r;
}

// ---------------------------------------------------------------------------

LayoutEditor::LayoutEditor(data::SemanticLayout initial, int background)
    : layout_(std::move(initial)), background_(background),
      history_(static_cast<std::size_t>(layout_.height()) * layout_.width()) {
    if (background < 0 || background >= data::kLayoutChannels) {
        throw ValidationError("background", "must be a layout channel in [0,18]");
    }
}

void LayoutEditor::apply(const LayoutEdit& edit) {
    if (edit.label < 0 || edit.label >= data::kLayoutChannels) {
        throw ValidationError("class", "must lie in [0,18], got " + std::to_string(edit.label));
    }
    if (edit.mask.size() != history_.size()) {
        throw ValidationError("mask", "mask is " + std::to_string(edit.mask.size()) + " pixels, layout is " +
                                          std::to_string(history_.size()));
    }
    data::IndexMap map = data::decode_layout(layout_);
    for (std::size_t p = 0; p < history_.size(); ++p) {
        if (!edit.mask[p]) continue;
        auto& stack = history_[p];
        if (edit.op == EditOp::Add) {
            stack.push_back(map.labels[p]);
            map.labels[p] = static_cast<std::uint8_t>(edit.label);
        } else if (map.labels[p] == edit.label) {
            if (stack.empty()) {
                map.labels[p] = static_cast<std::uint8_t>(background_);
            } else {
                map.labels[p] = stack.back();
                stack.pop_back();
            }
        }
    }
    layout_ = data::encode_layout(map);
}

std::vector<data::SemanticLayout> apply_edit_script(const data::SemanticLayout& layout,
                                                    std::span<const LayoutEdit> script, int background) {
    LayoutEditor editor(layout, background);
    std::vector<data::SemanticLayout> out{layout};
    for (std::size_t i = 0; i < script.size(); ++i) {
        try {
            editor.apply(script[i]);
        } catch (const ValidationError& e) {
            throw ValidationError("edits[" + std::to_string(i) + "]." + e.field(), e.what());
        }
        out.push_back(editor.layout());
    }
    return out;
}

std::vector<LayoutEdit> parse_edit_script(const nlohmann::json& doc, const fs::path& base_dir, int resolution) {
    const nlohmann::json& list = doc.is_object() && doc.contains("edits") ? doc["edits"] : doc;
    if (!list.is_array()) throw ValidationError("edits", "edit script must be a JSON list");
    const auto taxonomy = data::LabelTaxonomy::standard();
    std::vector<LayoutEdit> edits;
    for (std::size_t i = 0; i < list.size(); ++i) {
        const auto& j = list[i];
        const std::string field = "edits[" + std::to_string(i) + "]";
        if (!j.is_object()) throw ValidationError(field, "must be an object");
        LayoutEdit e;

        if (!j.contains("op") || !j["op"].is_string()) throw ValidationError(field + ".op", "missing");
        const auto op = j["op"].get<std::string>();
        if (op == "add") {
            e.op = EditOp::Add;
        } else if (op == "remove") {
            e.op = EditOp::Remove;
        } else {
            throw ValidationError(field + ".op", "must be 'add' or 'remove'");
        }

        if (!j.contains("class")) throw ValidationError(field + ".class", "missing");
        if (j["class"].is_number_integer()) {
            e.label = j["class"].get<int>();
        } else if (j["class"].is_string()) {
            try {
                e.label = taxonomy.index_of(j["class"].get<std::string>());
            } catch (const ValidationError& err) {
                throw ValidationError(field + ".class", err.what());
            }
        } else {
            throw ValidationError(field + ".class", "must be a label name or index");
        }
        if (e.label < 0 || e.label >= data::kLayoutChannels) throw ValidationError(field + ".class", "must lie in [0,18]");

        data::RgbBytes rgb;
        if (j.contains("mask") && j["mask"].is_string()) {
            try {
                rgb = data::decode_png_rgb(base64_decode(j["mask"].get<std::string>(), field + ".mask"));
            } catch (const IoError& err) {
                throw ValidationError(field + ".mask", err.what());
            }
        } else if (j.contains("mask_png") && j["mask_png"].is_string()) {
            fs::path mask_path = j["mask_png"].get<std::string>();
            if (mask_path.is_relative()) mask_path = base_dir / mask_path;
            if (!fs::exists(mask_path)) throw IoError(field + ".mask_png: missing file " + mask_path.string());
            rgb = data::read_png_rgb(mask_path);
        } else {
            throw ValidationError(field + ".mask_png", "missing (give mask_png or an inline base64 mask)");
        }
        if (rgb.height != resolution || rgb.width != resolution) {
            throw ValidationError(field + (j.contains("mask") ? ".mask" : ".mask_png"), "mask must be " + std::to_string(resolution) + "x" +
                                                           std::to_string(resolution));
        }
        e.mask.resize(static_cast<std::size_t>(resolution) * resolution);
        for (std::size_t p = 0; p < e.mask.size(); ++p) {
            e.mask[p] = (rgb.data[3 * p] | rgb.data[3 * p + 1] | rgb.data[3 * p + 2]) != 0 ? 1 : 0;
        }
        edits.push_back(std::move(e));
    }
    return edits;
}

std::vector<LayoutEdit> load_edit_script(const fs::path& path, int resolution) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open edit script " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("edits", e.what());
    }
    return parse_edit_script(doc, path.has_parent_path() ? path.parent_path() : fs::path("."), resolution);
}

// ---------------------------------------------------------------------------

double l1_distance(const data::Image& a, const data::Image& b) {
    if (a.height != b.height || a.width != b.width) {
        throw ValidationError("query", "image is " + std::to_string(a.height) + "x" + std::to_string(a.width) +
                                           ", training images are " + std::to_string(b.height) + "x" +
                                           std::to_string(b.width));
    }
    double d = 0.0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i) d += std::abs(double(a.pixels[i]) - double(b.pixels[i]));
    return d;
}

NearestMatch nearest_training_image(const data::Image& query, std::span<const data::SceneSample> samples) {
    if (samples.empty()) throw ValidationError("manifest", "no training images");
    NearestMatch best{0, l1_distance(query, samples[0].image)};
    for (std::size_t i = 1; i < samples.size(); ++i) {
        const double d = l1_distance(query, samples[i].image);
        if (d < best.distance) best = {i, d};
    }
    return best;
}

NearestMatch nearest_training_image(const data::Image& query, const data::DatasetManifest& manifest) {
    if (manifest.records.empty()) throw ValidationError("manifest", "no training images");
    NearestMatch best{0, 0.0};
    for (std::size_t i = 0; i < manifest.records.size(); ++i) {
        const auto image = data::preprocess_image(data::read_png_rgb(manifest.resolve(manifest.records[i].image)),
                                                  manifest.resolution);
        const double d = l1_distance(query, image);
        if (i == 0 || d < best.distance) best = {i, d};
    }
    return best;
}

} // namespace alcgan::eval
