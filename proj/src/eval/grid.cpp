#include "alcgan/eval/grid.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "alcgan/data/png_io.hpp"
#include "alcgan/error.hpp"
#include "alcgan/eval/base64.hpp"
#include "alcgan/model/conditioning.hpp"
#include "alcgan/train/checkpoint.hpp"
#include "font.hpp"

namespace alcgan::eval {

namespace fs = std::filesystem;

namespace {

constexpr int kGutter = 2;
constexpr int kMargin = 3;
constexpr std::uint8_t kBackground = 24;
constexpr std::uint8_t kInk = 230;

std::size_t longest(const std::vector<std::string>& labels) {
    std::size_t n = 0;
    for (const auto& l : labels) n = std::max(n, l.size());
    return n;
}

} // namespace

void require_finite_weights(const model::Generator<float>& generator) {
    // parameters() only hands out pointers; nothing is modified here.
    for (const auto& p : const_cast<model::Generator<float>&>(generator).parameters()) {
        if (!p.value->all_finite()) throw ValidationError("checkpoint", "generator weights '" + p.name + "' are not finite");
    }
}

data::Image generate_image(const model::Generator<float>& generator, const Probe& probe) {
    const auto& c = generator.config();
    const std::vector<float> z = c.noise_dim > 0 ? model::sample_noise(c.noise_dim, probe.seed) : std::vector<float>{};
    std::vector<model::ConditioningVolume> one{
        model::assemble_generator_input(z, &probe.attributes, &probe.layout, c)};
    const Tensor<float> out = generator.forward(model::stack_conditioning<float>(one));
    data::Image img(c.resolution, c.resolution);
    std::copy(out.data(), out.data() + out.size(), img.pixels.begin());
    return img;
}

std::vector<data::Image> generate_images(const model::Generator<float>& generator, std::span<const Probe> probes) {
    require_finite_weights(generator);
    std::vector<data::Image> out;
    out.reserve(probes.size());
    for (const auto& p : probes) out.push_back(generate_image(generator, p));
    return out;
}

void GridReport::validate() const {
    if (rows <= 0 || cols <= 0 || cells.empty()) throw ValidationError("report", "grid is empty");
    if (cells.size() != static_cast<std::size_t>(rows) * cols) {
        throw ValidationError("report.cells", "expected rows*cols cells");
    }
    if (!row_labels.empty() && static_cast<int>(row_labels.size()) != rows) {
        throw ValidationError("report.row_labels", "one label per row");
    }
    if (!col_labels.empty() && static_cast<int>(col_labels.size()) != cols) {
        throw ValidationError("report.col_labels", "one label per column");
    }
    const int h = cells.front().image.height, w = cells.front().image.width;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const auto& c = cells[i];
        if (c.image.height != h || c.image.width != w || c.image.pixels.size() != 3u * h * w) {
            throw ValidationError("report.cells[" + std::to_string(i) + "]", "image size differs");
        }
        if (c.source < 0 || c.source >= static_cast<int>(std::max<std::size_t>(sources.size(), 1))) {
            throw ValidationError("report.cells[" + std::to_string(i) + "].source", "no such source");
        }
    }
}

int montage_scale(const GridReport& report) {
    if (report.cells.empty()) return 1;
    const int cell = report.cells.front().image.width;
    const int need = text_width(std::string(longest(report.col_labels), 'x')) + 2;
    return std::clamp((need + cell - 1) / std::max(cell, 1), 1, 8);
}

data::RgbBytes render_montage(const GridReport& report, int scale) {
    report.validate();
    if (scale < 1) throw ValidationError("scale", "must be at least 1");
    const int ch = report.cells.front().image.height * scale;
    const int cw = report.cells.front().image.width * scale;
    const int left = report.row_labels.empty() ? 0 : text_width(std::string(longest(report.row_labels), 'x')) + kMargin;
    const int top = report.col_labels.empty() ? 0 : kGlyphHeight + kMargin;

    data::RgbBytes out;
    out.width = kGutter + left + report.cols * (cw + kGutter);
    out.height = kGutter + top + report.rows * (ch + kGutter);
    out.data.assign(static_cast<std::size_t>(out.width) * out.height * 3, kBackground);

    for (int c = 0; c < static_cast<int>(report.col_labels.size()); ++c) {
        draw_text(out, kGutter + left + c * (cw + kGutter), kGutter, report.col_labels[c], kInk);
    }
    for (int r = 0; r < report.rows; ++r) {
        const int y0 = kGutter + top + r * (ch + kGutter);
        if (!report.row_labels.empty()) {
            draw_text(out, kGutter, y0 + (ch - kGlyphHeight) / 2, report.row_labels[r], kInk);
        }
        for (int c = 0; c < report.cols; ++c) {
            const auto bytes = data::quantize_image(report.at(r, c).image);
            const int x0 = kGutter + left + c * (cw + kGutter);
            for (int y = 0; y < ch; ++y) {
                for (int x = 0; x < cw; ++x) {
                    const std::size_t src = (static_cast<std::size_t>(y / scale) * bytes.width + x / scale) * 3;
                    const std::size_t dst = (static_cast<std::size_t>(y0 + y) * out.width + x0 + x) * 3;
                    std::copy_n(bytes.data.begin() + src, 3, out.data.begin() + dst);
                }
            }
        }
    }
    return out;
}

nlohmann::json grid_sidecar(const GridReport& report) {
    report.validate();
    nlohmann::json doc;
    doc["kind"] = report.kind;
    doc["rows"] = report.rows;
    doc["cols"] = report.cols;
    doc["row_labels"] = report.row_labels;
    doc["col_labels"] = report.col_labels;
    doc["parameters"] = report.parameters;
    doc["sources"] = nlohmann::json::array();
    for (const auto& s : report.sources) {
        doc["sources"].push_back({{"checkpoint", s.checkpoint}, {"sha256", s.sha256}, {"label", s.label}});
    }
    // Layouts are shared by many cells; store each distinct one once.
    std::map<std::string, int> layout_ids;
    doc["layouts"] = nlohmann::json::array();
    doc["cells"] = nlohmann::json::array();
    for (std::size_t i = 0; i < report.cells.size(); ++i) {
        const auto& c = report.cells[i];
        const std::string png = base64_encode(data::encode_png_indexed(data::decode_layout(c.probe.layout)));
        auto [it, inserted] = layout_ids.emplace(png, static_cast<int>(layout_ids.size()));
        if (inserted) doc["layouts"].push_back(png);
        doc["cells"].push_back({{"row", static_cast<int>(i) / report.cols},
                                {"col", static_cast<int>(i) % report.cols},
                                {"source", c.source},
                                {"seed", c.probe.seed},
                                {"layout", it->second},
                                {"attributes", c.probe.attributes.to_json()}});
    }
    return doc;
}

fs::path export_grid(const GridReport& report, const fs::path& path) {
    report.validate();
    const int scale = montage_scale(report);
    const auto montage = render_montage(report, scale);
    nlohmann::json doc = grid_sidecar(report);
    doc["montage"] = {{"file", path.filename().string()}, {"scale", scale}};

    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    data::write_png_rgb(path, montage);
    fs::path sidecar = path;
    sidecar.replace_extension(".json");
    std::ofstream out(sidecar);
    if (!out) throw IoError("cannot write " + sidecar.string());
    out << doc.dump(2) << '\n';
    if (!out) throw IoError("cannot write " + sidecar.string());
    return sidecar;
}

GridReport regenerate_grid(const nlohmann::json& doc) {
    GridReport r;
    try {
        r.kind = doc.at("kind").get<std::string>();
        r.rows = doc.at("rows").get<int>();
        r.cols = doc.at("cols").get<int>();
        r.row_labels = doc.at("row_labels").get<std::vector<std::string>>();
        r.col_labels = doc.at("col_labels").get<std::vector<std::string>>();
        r.parameters = doc.value("parameters", nlohmann::json::object());
        for (const auto& s : doc.at("sources")) {
            r.sources.push_back({s.at("checkpoint").get<std::string>(), s.at("sha256").get<std::string>(),
                                 s.value("label", std::string())});
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("sidecar", e.what());
    }

    std::vector<train::Checkpoint> models;
    for (std::size_t i = 0; i < r.sources.size(); ++i) {
        const auto& s = r.sources[i];
        const std::string field = "sources[" + std::to_string(i) + "]";
        if (s.checkpoint.empty()) throw ValidationError(field + ".checkpoint", "grid was built from an unsaved model");
        if (train::file_sha256(s.checkpoint) != s.sha256) {
            throw ValidationError(field + ".sha256", "checkpoint " + s.checkpoint + " changed since export");
        }
        models.push_back(train::load_checkpoint(s.checkpoint));
    }
    if (models.empty()) throw ValidationError("sources", "sidecar names no checkpoint");

    std::vector<data::SemanticLayout> layouts;
    for (std::size_t i = 0; i < doc.at("layouts").size(); ++i) {
        const std::string field = "layouts[" + std::to_string(i) + "]";
        layouts.push_back(data::encode_layout(
            data::decode_png_indexed(base64_decode(doc["layouts"][i].get<std::string>(), field))));
    }
    for (std::size_t i = 0; i < doc.at("cells").size(); ++i) {
        const auto& j = doc["cells"][i];
        const std::string field = "cells[" + std::to_string(i) + "]";
        GridCell c;
        c.source = j.at("source").get<int>();
        if (c.source < 0 || c.source >= static_cast<int>(models.size())) throw ValidationError(field + ".source", "no such source");
        const int layout = j.at("layout").get<int>();
        if (layout < 0 || layout >= static_cast<int>(layouts.size())) throw ValidationError(field + ".layout", "no such layout");
        c.probe.layout = layouts[layout];
        c.probe.attributes = data::AttributeVector::from_json(j.at("attributes"), field + ".attributes");
        c.probe.seed = j.at("seed").get<std::uint64_t>();
        const auto& g = models[c.source].generator;
        require_finite_weights(g);
        c.image = generate_image(g, c.probe);
        r.cells.push_back(std::move(c));
    }
    r.validate();
    return r;
}

GridReport regenerate_grid(const fs::path& sidecar_path) {
    std::ifstream in(sidecar_path);
    if (!in) throw IoError("cannot open " + sidecar_path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(sidecar_path.string(), e.what());
    }
    return regenerate_grid(doc);
}

} // namespace alcgan::eval
