#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "alcgan/eval/grid.hpp"
#include "alcgan/eval/toy_metrics.hpp"
#include "alcgan/train/trainer.hpp"

namespace alcgan::eval {

struct AblationOptions {
    model::ModelConfig base_model; // AL widths; each variant adjusts the input channels
    train::TrainingConfig training;
    std::vector<model::VariantKind> variants{model::VariantKind::AL, model::VariantKind::A_ONLY,
                                             model::VariantKind::L_ONLY};
    std::vector<Probe> probes;      // grid columns, shared by every variant
    std::filesystem::path out_dir;  // one subdirectory per variant; empty writes nothing
    std::optional<data::ToySceneSpec> toy;
    ToyEvalOptions toy_eval;
};

struct VariantOutcome {
    model::VariantKind variant = model::VariantKind::AL;
    bool trained = false;
    std::string error;
    std::filesystem::path checkpoint;
    double train_seconds = 0.0;
    std::optional<ToyEvaluation> toy;
};

struct AblationResult {
    GridReport grid; // one row per variant that trained
    std::vector<VariantOutcome> outcomes;
};

/// Trains every variant with the same data, seed and budget. A variant that
/// diverges is reported and skipped; the others still run.
AblationResult ablation_compare(std::span<const data::SceneSample> dataset, const AblationOptions& options);

/// variant,status,train_seconds,color_error,sweep_monotone_fraction,checkpoint
void write_ablation_csv(const AblationResult& result, const std::filesystem::path& path);

} // namespace alcgan::eval
