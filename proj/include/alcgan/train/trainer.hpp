#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "alcgan/data/manifest.hpp"
#include "alcgan/model/config.hpp"
#include "alcgan/model/networks.hpp"
#include "alcgan/train/losses.hpp"
#include "alcgan/train/optimizer.hpp"

namespace alcgan::train {

struct TrainingConfig {
    int batch_size = 64;
    double learning_rate = 2e-4;
    double adam_beta1 = 0.5;
    double adam_beta2 = 0.999;
    int epochs = 400;
    double init_std = 0.02;
    std::uint64_t seed = 0;
    model::VariantKind variant = model::VariantKind::AL;
    int d_steps_per_g_step = 1;
    GeneratorLossMode generator_loss_mode = GeneratorLossMode::NonSaturating;
    int checkpoint_every = 0; // epochs; 0 = only at the end

    void validate() const;
    nlohmann::json to_json() const;
    static TrainingConfig from_json(const nlohmann::json& j);
};

/// Model and training settings read from one JSON file:
/// {"model": {...} | {"scaled": {"resolution", "channel_multiplier"}}, "training": {...}}.
/// The training variant is applied to the model config.
struct RunConfig {
    model::ModelConfig model;
    TrainingConfig training;

    static RunConfig from_json(const nlohmann::json& j);
    static RunConfig load(const std::filesystem::path& path);
    nlohmann::json to_json() const;
};

/// Everything a run needs to continue: weights, optimizer moments, RNG, counters.
struct Checkpoint {
    Checkpoint(const model::ModelConfig& model, const TrainingConfig& training);

    model::ModelConfig model;
    TrainingConfig training;
    model::Generator<float> generator;
    model::Discriminator<float> discriminator;
    Adam adam_g, adam_d;
    std::mt19937_64 rng;
    int epoch = 0;          // completed epochs
    std::int64_t step = 0;  // completed train steps
};

/// Kernels ~ N(0, std^2), biases 0, BN scale 1 / shift 0, running stats reset.
/// Deterministic per seed.
void init_weights(model::Generator<float>& g, model::Discriminator<float>& d, double std, std::uint64_t seed);
template <typename T>
void init_parameters(nn::ParamList<T> params, double std, std::mt19937_64& rng);

struct StepMetrics {
    std::int64_t step = 0;
    int epoch = 0;
    double d_loss = 0.0;
    double g_loss = 0.0;
    double d_real = 0.0; // mean D(real)
    double d_fake = 0.0; // mean D(G(z)) before the G update
    double wall_ms = 0.0;
};

/// One D update (repeated d_steps_per_g_step times with fresh noise), then one
/// G update. Fakes are conditioned on the batch's own layouts and attributes.
/// Throws NonFiniteError when a loss or activation is not finite.
StepMetrics train_step(Checkpoint& state, std::span<const data::SceneSample* const> batch);

struct FitOptions {
    std::filesystem::path out_dir; // empty: no files written
    std::function<void(const StepMetrics&)> on_step;
};

struct EpochMetrics {
    int epoch = 0;
    double d_loss = 0.0, g_loss = 0.0, d_real = 0.0, d_fake = 0.0, wall_ms = 0.0;
};

struct FitResult {
    std::vector<StepMetrics> steps;
    std::vector<EpochMetrics> epochs;
    std::filesystem::path final_checkpoint;
};

/// Thrown when training produces non-finite values; carries the last
/// checkpoint written (empty if none).
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, std::filesystem::path last_checkpoint)
        : Error(what), last_(std::move(last_checkpoint)) {}
    const std::filesystem::path& last_checkpoint() const noexcept { return last_; }

private:
    std::filesystem::path last_;
};

/// Runs epochs state.epoch .. training.epochs-1 over shuffled mini-batches,
/// dropping the last partial batch. Writes metrics.csv and checkpoints into
/// out_dir when set (every checkpoint_every epochs and at the end).
FitResult fit(Checkpoint& state, std::span<const data::SceneSample> dataset, const FitOptions& options = {});

/// Builds the real-image tensor for a batch.
Tensor<float> image_batch(std::span<const data::SceneSample* const> batch, int resolution);

} // namespace alcgan::train
