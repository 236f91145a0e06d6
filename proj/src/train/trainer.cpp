#include "alcgan/train/trainer.hpp"

#include <chrono>
#include <fstream>
#include <iomanip>
#include <numeric>

#include <spdlog/spdlog.h>

#include "alcgan/error.hpp"
#include "alcgan/model/conditioning.hpp"
#include "alcgan/train/checkpoint.hpp"

namespace alcgan::train {

using Clock = std::chrono::steady_clock;

// ---------------------------------------------------------------------------
// Configuration

void TrainingConfig::validate() const {
    if (batch_size < 2) throw ValidationError("batch_size", "must be at least 2 (batch normalization)");
    if (!(learning_rate >= 0.0)) throw ValidationError("learning_rate", "must be non-negative");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0)) throw ValidationError("adam_beta1", "must lie in [0,1)");
    if (!(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) throw ValidationError("adam_beta2", "must lie in [0,1)");
    if (epochs < 0) throw ValidationError("epochs", "must be non-negative");
    if (!(init_std > 0.0)) throw ValidationError("init_std", "must be positive");
    if (d_steps_per_g_step < 1) throw ValidationError("d_steps_per_g_step", "must be at least 1");
    if (checkpoint_every < 0) throw ValidationError("checkpoint_every", "must be non-negative");
}

nlohmann::json TrainingConfig::to_json() const {
    return {{"batch_size", batch_size},
            {"learning_rate", learning_rate},
            {"adam_beta1", adam_beta1},
            {"adam_beta2", adam_beta2},
            {"epochs", epochs},
            {"init_std", init_std},
            {"seed", seed},
            {"variant", model::to_string(variant)},
            {"d_steps_per_g_step", d_steps_per_g_step},
            {"generator_loss_mode", to_string(generator_loss_mode)},
            {"checkpoint_every", checkpoint_every}};
}

TrainingConfig TrainingConfig::from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ValidationError("training", "must be an object");
    TrainingConfig c;
    try {
        c.batch_size = j.value("batch_size", c.batch_size);
        c.learning_rate = j.value("learning_rate", c.learning_rate);
        c.adam_beta1 = j.value("adam_beta1", c.adam_beta1);
        c.adam_beta2 = j.value("adam_beta2", c.adam_beta2);
        c.epochs = j.value("epochs", c.epochs);
        c.init_std = j.value("init_std", c.init_std);
        c.seed = j.value("seed", c.seed);
        c.variant = model::parse_variant(j.value("variant", std::string("AL")));
        c.d_steps_per_g_step = j.value("d_steps_per_g_step", c.d_steps_per_g_step);
        c.generator_loss_mode =
            parse_generator_loss_mode(j.value("generator_loss_mode", std::string("non_saturating")));
        c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("training", e.what());
    }
    c.validate();
    return c;
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ValidationError("config", "must be an object");
    RunConfig r;
    r.training = TrainingConfig::from_json(j.value("training", nlohmann::json::object()));
    model::ModelConfig base;
    const auto m = j.value("model", nlohmann::json::object());
    if (m.contains("scaled")) {
        const auto& s = m["scaled"];
        try {
            base = model::scaled_model_config(s.value("resolution", 32), s.value("channel_multiplier", 0.25),
                                              s.value("bottleneck", 8));
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError("model.scaled", e.what());
        }
    } else {
        base = model::ModelConfig::from_json(m);
    }
    r.model = model::make_variant(r.training.variant, base.generator, base.discriminator);
    return r;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    try {
        return from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError("config", std::string("malformed JSON: ") + e.what());
    }
}

nlohmann::json RunConfig::to_json() const { return {{"model", model.to_json()}, {"training", training.to_json()}}; }

// ---------------------------------------------------------------------------
// State and initialization

Checkpoint::Checkpoint(const model::ModelConfig& m, const TrainingConfig& t)
    : model(m), training(t), generator(m.generator), discriminator(m.discriminator),
      adam_g(t.learning_rate, t.adam_beta1, t.adam_beta2), adam_d(t.learning_rate, t.adam_beta1, t.adam_beta2),
      rng(t.seed) {
    training.validate();
    init_weights(generator, discriminator, training.init_std, training.seed);
}

template <typename T>
void init_parameters(nn::ParamList<T> params, double std, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, std);
    for (auto& p : params) {
        const std::string& n = p.name;
        if (n.ends_with(".weight")) {
            for (auto& v : p.value->storage()) v = static_cast<T>(normal(rng));
        } else if (n.ends_with(".gamma") || n.ends_with(".running_var")) {
            p.value->fill(T(1));
        } else {
            p.value->zero(); // biases, BN shift, running mean
        }
        if (p.grad) p.grad->zero();
    }
}

template void init_parameters<float>(nn::ParamList<float>, double, std::mt19937_64&);
template void init_parameters<double>(nn::ParamList<double>, double, std::mt19937_64&);

void init_weights(model::Generator<float>& g, model::Discriminator<float>& d, double std, std::uint64_t seed) {
    // Separate streams keep G's weights independent of D's size.
    std::mt19937_64 rng_g(seed ^ 0x6a09e667f3bcc908ULL);
    std::mt19937_64 rng_d(seed ^ 0xbb67ae8584caa73bULL);
    init_parameters(g.parameters(), std, rng_g);
    init_parameters(d.parameters(), std, rng_d);
}

// ---------------------------------------------------------------------------
// Steps

Tensor<float> image_batch(std::span<const data::SceneSample* const> batch, int resolution) {
    Tensor<float> x(static_cast<int>(batch.size()), 3, resolution, resolution);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const data::Image& im = batch[i]->image;
        if (im.height != resolution || im.width != resolution) {
            throw ValidationError("batch[" + std::to_string(i) + "].image",
                                  "expected " + std::to_string(resolution) + "x" + std::to_string(resolution));
        }
        std::copy(im.pixels.begin(), im.pixels.end(), x.sample(static_cast<int>(i)));
    }
    return x;
}

namespace {

void check_loss(double v, const char* name) {
    if (!std::isfinite(v)) throw NonFiniteError(name);
}

} // namespace

StepMetrics train_step(Checkpoint& state, std::span<const data::SceneSample* const> batch) {
    const auto start = Clock::now();
    const int n = static_cast<int>(batch.size());
    if (n < 2) throw ValidationError("batch", "need at least 2 samples");
    const auto& gc = state.model.generator;
    const auto& dc = state.model.discriminator;
    const int r = gc.resolution;

    const Tensor<float> real = image_batch(batch, r);
    model::ConditioningBatch cond_d(r, dc.layout_channels, dc.attribute_channels, 0);
    model::ConditioningBatch cond_g(r, gc.layout_channels, gc.attribute_channels, gc.noise_dim);
    cond_d.resize(n);
    cond_g.resize(n);
    std::vector<float> z(gc.noise_dim);
    for (int i = 0; i < n; ++i) cond_d.set(i, &batch[i]->layout, &batch[i]->attributes, {});

    auto draw_noise = [&] {
        for (int i = 0; i < n; ++i) {
            model::sample_noise(state.rng, z);
            cond_g.set(i, &batch[i]->layout, &batch[i]->attributes, z);
        }
    };

    StepMetrics m;
    Tensor<float> fake;
    auto& d = state.discriminator;
    for (int k = 0; k < state.training.d_steps_per_g_step; ++k) {
        draw_noise();
        fake = state.generator.forward_train(cond_g.input());
        d.zero_grad();
        // Real and fake batches share the conditioning, so its branch runs once.
        d.set_condition(cond_d.input());
        const auto lr = d_loss_real(d.forward_image(real));
        d.backward_image(lr.grad, false);
        const auto lf = d_loss_fake(d.forward_image(fake));
        d.backward_image(lf.grad, false);
        d.backward_condition();
        m.d_loss = lr.value + lf.value;
        m.d_real = lr.mean_score;
        m.d_fake = lf.mean_score;
        check_loss(m.d_loss, "d_loss");
        state.adam_d.step(d.parameters());
    }

    // G step on the last fake batch; the generator's cache still matches it.
    // Only the image gradient is needed from D, so its conditioning branch is not back-propagated.
    state.generator.zero_grad();
    d.set_condition(cond_d.input());
    const auto lg = g_loss(d.forward_image(fake), state.training.generator_loss_mode);
    check_loss(lg.value, "g_loss");
    const Tensor<float> grad_fake = d.backward_image(lg.grad, true);
    state.generator.backward(grad_fake);
    state.adam_g.step(state.generator.parameters());
    m.g_loss = lg.value;

    ++state.step;
    m.step = state.step;
    m.epoch = state.epoch;
    m.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    return m;
}

// ---------------------------------------------------------------------------
// Epoch loop

FitResult fit(Checkpoint& state, std::span<const data::SceneSample> dataset, const FitOptions& options) {
    const int bs = state.training.batch_size;
    if (static_cast<int>(dataset.size()) < bs) {
        throw ValidationError("dataset", "has " + std::to_string(dataset.size()) +
                                             " samples, fewer than one batch of " + std::to_string(bs));
    }
    FitResult result;
    const bool write = !options.out_dir.empty();
    std::ofstream csv;
    if (write) {
        std::filesystem::create_directories(options.out_dir);
        const auto path = options.out_dir / "metrics.csv";
        const bool append = state.epoch > 0 && std::filesystem::exists(path);
        csv.open(path, append ? std::ios::app : std::ios::trunc);
        if (!csv) throw IoError("cannot write " + path.string());
        if (!append) csv << "step,epoch,d_loss,g_loss,d_real,d_fake,wall_ms\n";
        csv << std::setprecision(9);
    }
    std::filesystem::path last_checkpoint;
    auto save = [&](const std::string& name) {
        const auto path = options.out_dir / name;
        save_checkpoint(state, path);
        last_checkpoint = path;
    };

    std::vector<std::size_t> order(dataset.size());
    std::vector<const data::SceneSample*> batch(bs);
    const std::size_t batches = dataset.size() / bs;
    while (state.epoch < state.training.epochs) {
        const auto epoch_start = Clock::now();
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), state.rng);
        EpochMetrics em;
        em.epoch = state.epoch;
        for (std::size_t b = 0; b < batches; ++b) {
            for (int i = 0; i < bs; ++i) batch[i] = &dataset[order[b * bs + i]];
            StepMetrics m;
            try {
                m = train_step(state, batch);
            } catch (const NonFiniteError& e) {
                throw DivergenceError(std::string(e.what()) + " at step " + std::to_string(state.step + 1) +
                                          (last_checkpoint.empty() ? std::string(" (no checkpoint written)")
                                                                   : "; last good checkpoint " +
                                                                         last_checkpoint.string()),
                                      last_checkpoint);
            }
            em.d_loss += m.d_loss;
            em.g_loss += m.g_loss;
            em.d_real += m.d_real;
            em.d_fake += m.d_fake;
            if (csv.is_open()) {
                csv << m.step << ',' << m.epoch << ',' << m.d_loss << ',' << m.g_loss << ',' << m.d_real << ','
                    << m.d_fake << ',' << m.wall_ms << '\n';
            }
            if (options.on_step) options.on_step(m);
            result.steps.push_back(m);
        }
        const double nb = static_cast<double>(batches);
        em.d_loss /= nb;
        em.g_loss /= nb;
        em.d_real /= nb;
        em.d_fake /= nb;
        em.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - epoch_start).count();
        result.epochs.push_back(em);
        ++state.epoch;
        spdlog::info("epoch {}/{}: d_loss {:.4f} g_loss {:.4f} D(real) {:.3f} D(fake) {:.3f} ({:.0f} ms)",
                     state.epoch, state.training.epochs, em.d_loss, em.g_loss, em.d_real, em.d_fake, em.wall_ms);
        if (write && state.training.checkpoint_every > 0 && state.epoch % state.training.checkpoint_every == 0 &&
            state.epoch < state.training.epochs) {
            save("checkpoint_epoch" + std::to_string(state.epoch) + ".ckpt");
        }
    }
    if (csv.is_open()) csv.flush();
    if (write) {
        save("checkpoint.ckpt");
        result.final_checkpoint = last_checkpoint;
    }
    return result;
}

} // namespace alcgan::train
