#include "alcgan/eval/ablation.hpp"

#include <chrono>
#include <fmt/format.h>
#include <fstream>
#include <spdlog/spdlog.h>

#include "alcgan/error.hpp"
#include "alcgan/train/checkpoint.hpp"

namespace alcgan::eval {

namespace fs = std::filesystem;

AblationResult ablation_compare(std::span<const data::SceneSample> dataset, const AblationOptions& options) {
    if (options.variants.empty()) throw ValidationError("variants", "need at least one variant");
    if (options.probes.empty()) throw ValidationError("probes", "need at least one probe");
    options.training.validate();

    AblationResult result;
    auto& grid = result.grid;
    grid.kind = "ablation";
    grid.cols = static_cast<int>(options.probes.size());
    for (std::size_t i = 0; i < options.probes.size(); ++i) grid.col_labels.push_back("probe " + std::to_string(i));
    grid.parameters = {{"training", options.training.to_json()}, {"model", options.base_model.to_json()}};

    for (const auto variant : options.variants) {
        VariantOutcome outcome;
        outcome.variant = variant;
        const std::string name = model::to_string(variant);
        auto training = options.training;
        training.variant = variant;
        const auto model = model::make_variant(variant, options.base_model.generator, options.base_model.discriminator);
        train::FitOptions fit_options;
        if (!options.out_dir.empty()) fit_options.out_dir = options.out_dir / name;

        spdlog::info("ablation: training {}", name);
        const auto start = std::chrono::steady_clock::now();
        try {
            train::Checkpoint state(model, training);
            const auto fit = train::fit(state, dataset, fit_options);
            outcome.train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            outcome.trained = true;
            outcome.checkpoint = fit.final_checkpoint;
            if (options.toy) outcome.toy = evaluate_toy(state.generator, *options.toy, options.toy_eval);

            ModelSource source{outcome.checkpoint.string(),
                               outcome.checkpoint.empty() ? std::string() : train::file_sha256(outcome.checkpoint),
                               name};
            const int index = static_cast<int>(grid.sources.size());
            grid.sources.push_back(source);
            grid.row_labels.push_back(name);
            for (const auto& probe : options.probes) {
                grid.cells.push_back({index, probe, generate_image(state.generator, probe)});
            }
            ++grid.rows;
        } catch (const Error& e) {
            outcome.train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            outcome.error = e.what();
            spdlog::warn("ablation: {} failed: {}", name, e.what());
        }
        result.outcomes.push_back(std::move(outcome));
    }
    return result;
}

void write_ablation_csv(const AblationResult& result, const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "variant,status,train_seconds,color_error,sweep_monotone_fraction,checkpoint\n";
    for (const auto& o : result.outcomes) {
        out << model::to_string(o.variant) << ',' << (o.trained ? "ok" : "failed") << ','
            << fmt::format("{:.1f}", o.train_seconds) << ',';
        if (o.toy) {
            out << fmt::format("{:.6f},{:.4f}", o.toy->color_error, o.toy->sweep_monotone_fraction);
        } else {
            out << ',';
        }
        out << ',' << o.checkpoint.string() << '\n';
    }
}

} // namespace alcgan::eval
