#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "alcgan/data/attributes.hpp"
#include "alcgan/data/image.hpp"
#include "alcgan/data/layout.hpp"
#include "alcgan/model/networks.hpp"

namespace alcgan::eval {

/// Everything that determines one generated image besides the weights.
struct Probe {
    data::SemanticLayout layout;
    data::AttributeVector attributes;
    std::uint64_t seed = 0;
};

/// Rejects generators holding NaN or Inf weights.
void require_finite_weights(const model::Generator<float>& generator);

/// z = sample_noise(noise_dim, probe.seed), then one inference pass at batch
/// size 1, so an image never depends on what it was generated alongside.
data::Image generate_image(const model::Generator<float>& generator, const Probe& probe);
std::vector<data::Image> generate_images(const model::Generator<float>& generator, std::span<const Probe> probes);

/// Where a grid row's weights came from.
struct ModelSource {
    std::string checkpoint; // path as given; empty when the model was never saved
    std::string sha256;
    std::string label;
};

struct GridCell {
    int source = 0; // index into GridReport::sources
    Probe probe;
    data::Image image;
};

struct GridReport {
    std::string kind;
    int rows = 0;
    int cols = 0;
    std::vector<std::string> row_labels;
    std::vector<std::string> col_labels;
    std::vector<ModelSource> sources;
    std::vector<GridCell> cells; // row-major
    nlohmann::json parameters = nlohmann::json::object();

    const GridCell& at(int row, int col) const { return cells.at(static_cast<std::size_t>(row) * cols + col); }
    /// Throws ValidationError when empty or inconsistent.
    void validate() const;
};

/// Montage with labels drawn in a small bitmap font. Cells are upscaled by
/// `scale` (nearest neighbour) and separated by 2 px gutters.
data::RgbBytes render_montage(const GridReport& report, int scale);
/// Scale that leaves room for the longest column label, between 1 and 8.
int montage_scale(const GridReport& report);

/// Writes `path` (PNG) and `path` with extension .json (sidecar with every
/// probe, source checkpoint and hash needed to regenerate the cells).
/// Returns the sidecar path.
std::filesystem::path export_grid(const GridReport& report, const std::filesystem::path& path);

nlohmann::json grid_sidecar(const GridReport& report);
/// Reloads each source checkpoint (its hash must match the sidecar) and
/// regenerates every cell.
GridReport regenerate_grid(const nlohmann::json& sidecar);
GridReport regenerate_grid(const std::filesystem::path& sidecar_path);

} // namespace alcgan::eval
