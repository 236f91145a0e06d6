#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "alcgan/data/toy.hpp"
#include "alcgan/model/conditioning.hpp"
#include "alcgan/model/networks.hpp"
#include "alcgan/train/checkpoint.hpp"
#include "alcgan/train/losses.hpp"
#include "alcgan/train/trainer.hpp"
#include "grad_check.hpp"
#include "model_fixtures.hpp"

using namespace alcgan;
using namespace alcgan::train;

namespace {

constexpr double kFdTol = 1e-3;

Tensor<double> logits_for(double p, int n) {
    return Tensor<double>(n, 1, 1, 1, std::log(p / (1.0 - p)));
}

std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("alcgan_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

// 16x16 toy scenes and a one-stage network pair at 1/16 width: fast enough for
// hundreds of steps in a unit test.
data::ToySceneSpec small_spec() {
    auto spec = data::ToySceneSpec::defaults();
    spec.resolution = 16;
    return spec;
}

TrainingConfig small_training(int batch = 16, int epochs = 1) {
    TrainingConfig t;
    t.batch_size = batch;
    t.epochs = epochs;
    t.seed = 11;
    return t;
}

model::ModelConfig small_model() { return model::scaled_model_config(16, 1.0 / 16.0); }

std::vector<const data::SceneSample*> pointers(const std::vector<data::SceneSample>& ds, int n) {
    std::vector<const data::SceneSample*> b;
    for (int i = 0; i < n; ++i) b.push_back(&ds[i]);
    return b;
}

bool same_parameters(const nn::ParamList<float>& a, const nn::ParamList<float>& b, bool weights_only = false) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (weights_only && a[i].grad == nullptr) continue;
        if (a[i].value->storage() != b[i].value->storage()) return false;
    }
    return true;
}

} // namespace

// ---------------------------------------------------------------------------
// Loss values

TEST(Losses, HalfProbabilityValues) {
    const std::vector<double> half(8, 0.5);
    EXPECT_NEAR(d_loss(half, half), 2.0 * std::log(2.0), 1e-6);
    EXPECT_NEAR(g_loss(half, GeneratorLossMode::Minimax), -std::log(2.0), 1e-6);
    EXPECT_NEAR(g_loss(half, GeneratorLossMode::NonSaturating), std::log(2.0), 1e-6);

    const auto zero = logits_for(0.5, 8);
    EXPECT_NEAR(d_loss_real(zero).value + d_loss_fake(zero).value, 1.3862943611198906, 1e-6);
    EXPECT_NEAR(g_loss(zero, GeneratorLossMode::Minimax).value, -0.6931471805599453, 1e-6);
    EXPECT_NEAR(g_loss(zero, GeneratorLossMode::NonSaturating).value, 0.6931471805599453, 1e-6);
}

TEST(Losses, OptimaApproachZero) {
    const std::vector<double> one(4, 1.0 - 1e-9), nil(4, 1e-9);
    EXPECT_LT(d_loss(one, nil), 1e-6);
    EXPECT_LT(g_loss(one, GeneratorLossMode::NonSaturating), 1e-6);
    EXPECT_NEAR(d_loss_real(logits_for(1.0 - 1e-9, 4)).value + d_loss_fake(logits_for(1e-9, 4)).value, 0.0, 1e-6);
}

TEST(Losses, ClampKeepsSaturatedScoresFinite) {
    const std::vector<double> one(2, 1.0), nil(2, 0.0);
    EXPECT_TRUE(std::isfinite(d_loss(nil, one)));
    EXPECT_NEAR(d_loss(nil, one), -2.0 * std::log(kLogEpsilon), 1e-6);
    EXPECT_TRUE(std::isfinite(g_loss(one, GeneratorLossMode::Minimax)));
    EXPECT_TRUE(std::isfinite(d_loss_fake(logits_for(0.5, 2)).value));
    Tensor<double> huge(2, 1, 1, 1, 800.0);
    EXPECT_TRUE(std::isfinite(d_loss_fake(huge).value));
    EXPECT_TRUE(std::isfinite(d_loss_fake(huge).grad[0]));
}

TEST(Losses, MatchEmpiricalValueFunction) {
    // d_loss = -V and the minimax g_loss is V's fake term, for the empirical batch value V.
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.05, 0.95);
    std::vector<double> real(6), fake(6);
    for (auto& v : real) v = u(rng);
    for (auto& v : fake) v = u(rng);
    double e_d = 0.0, e_g = 0.0;
    for (double p : real) e_d += std::log(p) / 6.0;
    for (double p : fake) e_g += std::log(1.0 - p) / 6.0;
    EXPECT_NEAR(d_loss(real, fake), -(e_d + e_g), 1e-12);
    EXPECT_NEAR(g_loss(fake, GeneratorLossMode::Minimax), e_g, 1e-12);
}

TEST(Losses, RejectsMismatchedBatches) {
    const std::vector<double> a(3, 0.5), b(4, 0.5);
    EXPECT_THROW(d_loss(a, b), ValidationError);
}

TEST(Losses, ParseMode) {
    EXPECT_EQ(parse_generator_loss_mode("minimax"), GeneratorLossMode::Minimax);
    EXPECT_EQ(parse_generator_loss_mode("non_saturating"), GeneratorLossMode::NonSaturating);
    EXPECT_THROW(parse_generator_loss_mode("wasserstein"), ValidationError);
}

// ---------------------------------------------------------------------------
// Loss gradients through both networks, float64

class LossGradients : public ::testing::TestWithParam<GeneratorLossMode> {};

TEST_P(LossGradients, MatchFiniteDifferences) {
    std::mt19937_64 rng(21);
    const auto gc = testutil::micro_generator();
    const auto dc = testutil::micro_discriminator();
    model::Generator<double> g(gc);
    model::Discriminator<double> d(dc);
    testutil::randomize(g.parameters(), rng);
    testutil::randomize(d.parameters(), rng);

    const int n = 2;
    const auto g_in = testutil::random_condition<double>(n, 8, 3, 2 + 2, rng);
    auto d_in = g_in;
    d_in.constants = Tensor<double>(n, 2, 1, 1);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < 2; ++k) d_in.constants(i, k, 0, 0) = g_in.constants(i, k, 0, 0);
    const auto real = testutil::random_tensor(n, 3, 8, 8, rng, 0.5);
    const Tensor<double> fake = g.forward_train(g_in);

    // Discriminator side: d_loss with respect to every D parameter.
    d.zero_grad();
    d.backward(d_loss_real(d.forward_train(real, d_in)).grad, false);
    d.backward(d_loss_fake(d.forward_train(fake, d_in)).grad, false);
    auto d_objective = [&] {
        return d_loss_real(d.forward_train(real, d_in)).value + d_loss_fake(d.forward_train(fake, d_in)).value;
    };
    for (auto& p : d.parameters()) {
        if (!p.grad) continue;
        EXPECT_LT(testutil::max_fd_error(*p.value, *p.grad, d_objective, 12), kFdTol) << "D " << p.name;
    }

    // Generator side: g_loss through D with respect to every G parameter.
    const auto mode = GetParam();
    g.zero_grad();
    d.zero_grad();
    g.forward_train(g_in);
    const auto lg = g_loss(d.forward_train(g.forward_train(g_in), d_in), mode);
    g.backward(d.backward(lg.grad, true));
    auto g_objective = [&] { return g_loss(d.forward_train(g.forward_train(g_in), d_in), mode).value; };
    for (auto& p : g.parameters()) {
        if (!p.grad) continue;
        EXPECT_LT(testutil::max_fd_error(*p.value, *p.grad, g_objective, 12), kFdTol) << "G " << p.name;
    }
}

INSTANTIATE_TEST_SUITE_P(Modes, LossGradients,
                         ::testing::Values(GeneratorLossMode::Minimax, GeneratorLossMode::NonSaturating));

TEST(SplitDiscriminator, SharedConditionMatchesTwoFullPasses) {
    std::mt19937_64 rng(23);
    const auto dc = testutil::micro_discriminator(3);
    model::Discriminator<double> a(dc), b(dc);
    testutil::randomize(a.parameters(), rng);
    auto pa = a.parameters();
    auto pb = b.parameters();
    for (std::size_t i = 0; i < pa.size(); ++i) *pb[i].value = *pa[i].value;

    const auto cond = testutil::random_condition<double>(3, 8, 3, 2, rng);
    const auto x1 = testutil::random_tensor(3, 3, 8, 8, rng);
    const auto x2 = testutil::random_tensor(3, 3, 8, 8, rng);
    const auto r1 = testutil::random_tensor(3, 1, 1, 1, rng);
    const auto r2 = testutil::random_tensor(3, 1, 1, 1, rng);

    a.zero_grad();
    const auto ya1 = a.forward_train(x1, cond);
    const auto ga1 = a.backward(r1, true);
    const auto ya2 = a.forward_train(x2, cond);
    a.backward(r2, false);

    b.zero_grad();
    b.set_condition(cond);
    const auto yb1 = b.forward_image(x1);
    const auto gb1 = b.backward_image(r1, true);
    const auto yb2 = b.forward_image(x2);
    b.backward_image(r2, false);
    b.backward_condition();

    for (int i = 0; i < 3; ++i) {
        EXPECT_NEAR(ya1[i], yb1[i], 1e-12);
        EXPECT_NEAR(ya2[i], yb2[i], 1e-12);
    }
    for (std::size_t k = 0; k < ga1.size(); ++k) EXPECT_NEAR(ga1[k], gb1[k], 1e-12);
    for (std::size_t i = 0; i < pa.size(); ++i) {
        if (!pa[i].grad) continue;
        for (std::size_t k = 0; k < pa[i].grad->size(); ++k) {
            ASSERT_NEAR((*pa[i].grad)[k], (*pb[i].grad)[k], 1e-10) << pa[i].name;
        }
    }
}

TEST(SplitDiscriminator, ImageBeforeConditionIsRejected) {
    model::Discriminator<double> d(testutil::micro_discriminator());
    EXPECT_THROW(d.forward_image(Tensor<double>(2, 3, 8, 8)), ValidationError);
}

// ---------------------------------------------------------------------------
// Initialization

TEST(InitWeights, KernelVarianceMatchesConfiguredStd) {
    Tensor<float> kernel(1000, 1000, 1, 1), bias(16, 1, 1, 1, 5.0f), gamma(16, 1, 1, 1), beta(16, 1, 1, 1, 3.0f);
    Tensor<float> gk, gb, gg, gbe;
    nn::ParamList<float> params{{"big.weight", &kernel, &gk},
                                {"big.bias", &bias, &gb},
                                {"bn.gamma", &gamma, &gg},
                                {"bn.beta", &beta, &gbe}};
    std::mt19937_64 rng(5);
    init_parameters(params, 0.02, rng);
    double mean = 0.0, sq = 0.0;
    for (float v : kernel.storage()) mean += v;
    mean /= static_cast<double>(kernel.size());
    for (float v : kernel.storage()) sq += (v - mean) * (v - mean);
    const double var = sq / static_cast<double>(kernel.size() - 1);
    EXPECT_NEAR(var, 0.0004, 0.05 * 0.0004);
    EXPECT_NEAR(mean, 0.0, 1e-4);
    for (float v : bias.storage()) EXPECT_EQ(v, 0.0f);
    for (float v : gamma.storage()) EXPECT_EQ(v, 1.0f);
    for (float v : beta.storage()) EXPECT_EQ(v, 0.0f);
}

TEST(InitWeights, NetworkParametersFollowTheRule) {
    Checkpoint ck(small_model(), small_training());
    auto check = [](const nn::ParamList<float>& params) {
        for (const auto& p : params) {
            const auto& s = p.value->storage();
            if (p.name.ends_with(".weight")) {
                const bool any_nonzero = std::any_of(s.begin(), s.end(), [](float v) { return v != 0.0f; });
                EXPECT_TRUE(any_nonzero) << p.name;
            } else if (p.name.ends_with("gamma") || p.name.ends_with("running_var")) {
                for (float v : s) ASSERT_EQ(v, 1.0f) << p.name;
            } else {
                for (float v : s) ASSERT_EQ(v, 0.0f) << p.name;
            }
        }
    };
    check(ck.generator.parameters());
    check(ck.discriminator.parameters());
}

TEST(InitWeights, DeterministicPerSeed) {
    Checkpoint a(small_model(), small_training());
    Checkpoint b(small_model(), small_training());
    EXPECT_TRUE(same_parameters(a.generator.parameters(), b.generator.parameters()));
    EXPECT_TRUE(same_parameters(a.discriminator.parameters(), b.discriminator.parameters()));
    auto other = small_training();
    other.seed = 12;
    Checkpoint c(small_model(), other);
    EXPECT_FALSE(same_parameters(a.generator.parameters(), c.generator.parameters()));
}

// ---------------------------------------------------------------------------
// Config

TEST(TrainingConfig, DefaultsAndValidation) {
    TrainingConfig t;
    EXPECT_EQ(t.batch_size, 64);
    EXPECT_DOUBLE_EQ(t.learning_rate, 2e-4);
    EXPECT_DOUBLE_EQ(t.adam_beta1, 0.5);
    EXPECT_EQ(t.epochs, 400);
    EXPECT_DOUBLE_EQ(t.init_std, 0.02);
    EXPECT_EQ(t.d_steps_per_g_step, 1);
    EXPECT_EQ(t.generator_loss_mode, GeneratorLossMode::NonSaturating);

    auto bad = t;
    bad.batch_size = 1;
    EXPECT_THROW(bad.validate(), ValidationError);
    bad = t;
    bad.learning_rate = -1e-4;
    EXPECT_THROW(bad.validate(), ValidationError);
    bad = t;
    bad.init_std = 0.0;
    EXPECT_THROW(bad.validate(), ValidationError);
}

TEST(TrainingConfig, JsonRoundTripAndRunConfig) {
    TrainingConfig t;
    t.seed = 99;
    t.variant = model::VariantKind::L_ONLY;
    t.generator_loss_mode = GeneratorLossMode::Minimax;
    const auto back = TrainingConfig::from_json(t.to_json());
    EXPECT_EQ(back.to_json(), t.to_json());

    const auto run = RunConfig::from_json(nlohmann::json::parse(R"({
        "model": {"scaled": {"resolution": 32, "channel_multiplier": 0.25}},
        "training": {"epochs": 3, "variant": "L_ONLY"}})"));
    EXPECT_EQ(run.training.epochs, 3);
    EXPECT_EQ(run.model.variant, model::VariantKind::L_ONLY);
    EXPECT_EQ(run.model.generator.attribute_channels, 0);
    EXPECT_EQ(run.model.generator.layout_channels, 19);
    EXPECT_THROW(RunConfig::from_json(nlohmann::json::parse(R"({"training": {"batch_size": "x"}})")),
                 ValidationError);
}

// ---------------------------------------------------------------------------
// Training steps

TEST(TrainStep, OneStepGivesFiniteMetrics) {
    const auto ds = data::generate_toy_dataset(small_spec(), 16, 3);
    Checkpoint ck(small_model(), small_training());
    const auto m = train_step(ck, pointers(ds, 16));
    EXPECT_TRUE(std::isfinite(m.d_loss));
    EXPECT_TRUE(std::isfinite(m.g_loss));
    EXPECT_GT(m.d_real, 0.0);
    EXPECT_LT(m.d_real, 1.0);
    EXPECT_GT(m.d_fake, 0.0);
    EXPECT_LT(m.d_fake, 1.0);
    EXPECT_EQ(m.step, 1);
    EXPECT_EQ(ck.step, 1);
    EXPECT_EQ(ck.adam_d.steps(), 1);
    EXPECT_EQ(ck.adam_g.steps(), 1);
}

TEST(TrainStep, ZeroLearningRateLeavesWeightsUnchanged) {
    const auto ds = data::generate_toy_dataset(small_spec(), 16, 3);
    auto t = small_training();
    t.learning_rate = 0.0;
    Checkpoint ck(small_model(), t);
    Checkpoint ref(small_model(), t);
    train_step(ck, pointers(ds, 16));
    train_step(ck, pointers(ds, 16));
    // Batch-norm running statistics are buffers and do move.
    EXPECT_TRUE(same_parameters(ck.generator.parameters(), ref.generator.parameters(), true));
    EXPECT_TRUE(same_parameters(ck.discriminator.parameters(), ref.discriminator.parameters(), true));
}

TEST(TrainStep, SeveralDiscriminatorStepsPerGeneratorStep) {
    const auto ds = data::generate_toy_dataset(small_spec(), 16, 3);
    auto t = small_training();
    t.d_steps_per_g_step = 3;
    Checkpoint ck(small_model(), t);
    train_step(ck, pointers(ds, 16));
    EXPECT_EQ(ck.adam_d.steps(), 3);
    EXPECT_EQ(ck.adam_g.steps(), 1);
}

TEST(TrainStep, RejectsSingleSampleBatch) {
    const auto ds = data::generate_toy_dataset(small_spec(), 2, 3);
    Checkpoint ck(small_model(), small_training());
    EXPECT_THROW(train_step(ck, pointers(ds, 1)), ValidationError);
}

TEST(TrainStep, DiscriminatorLeadsEarlyInTraining) {
    const auto ds = data::generate_toy_dataset(small_spec(), 320, 4);
    auto t = small_training(32, 20);
    Checkpoint ck(small_model(), t);
    const auto result = fit(ck, ds);
    ASSERT_EQ(result.steps.size(), 200u);
    bool leads = false;
    for (std::size_t w = 0; w + 20 <= result.steps.size(); w += 20) {
        double real = 0.0, fake = 0.0;
        for (std::size_t k = w; k < w + 20; ++k) {
            real += result.steps[k].d_real;
            fake += result.steps[k].d_fake;
        }
        leads = leads || real > fake;
    }
    EXPECT_TRUE(leads);
    for (const auto& s : result.steps) {
        ASSERT_TRUE(std::isfinite(s.d_loss) && std::isfinite(s.g_loss));
    }
    for (const auto& p : ck.generator.parameters()) EXPECT_TRUE(p.value->all_finite()) << p.name;
    for (const auto& p : ck.discriminator.parameters()) EXPECT_TRUE(p.value->all_finite()) << p.name;
}

// ---------------------------------------------------------------------------
// fit

TEST(Fit, ZeroEpochsReturnsInitialWeights) {
    const auto ds = data::generate_toy_dataset(small_spec(), 32, 3);
    auto t = small_training();
    t.epochs = 0;
    Checkpoint ck(small_model(), t);
    Checkpoint ref(small_model(), t);
    const auto r = fit(ck, ds);
    EXPECT_TRUE(r.steps.empty());
    EXPECT_TRUE(same_parameters(ck.generator.parameters(), ref.generator.parameters()));
    EXPECT_TRUE(same_parameters(ck.discriminator.parameters(), ref.discriminator.parameters()));
}

TEST(Fit, RejectsDatasetSmallerThanBatch) {
    const auto ds = data::generate_toy_dataset(small_spec(), 10, 3);
    Checkpoint ck(small_model(), small_training(16));
    try {
        fit(ck, ds);
        FAIL() << "expected rejection";
    } catch (const ValidationError& e) {
        EXPECT_EQ(e.field(), "dataset");
    }
}

TEST(Fit, DropsPartialBatchAndWritesArtifacts) {
    const auto ds = data::generate_toy_dataset(small_spec(), 40, 3);
    auto t = small_training(16, 2);
    t.checkpoint_every = 1;
    Checkpoint ck(small_model(), t);
    const auto dir = scratch_dir("fit_artifacts");
    const auto r = fit(ck, ds, {dir, {}});
    EXPECT_EQ(r.steps.size(), 4u); // 2 full batches per epoch
    EXPECT_EQ(r.epochs.size(), 2u);
    EXPECT_EQ(ck.epoch, 2);
    EXPECT_TRUE(std::filesystem::exists(dir / "checkpoint_epoch1.ckpt"));
    EXPECT_TRUE(std::filesystem::exists(dir / "checkpoint.ckpt"));
    EXPECT_TRUE(std::filesystem::exists(r.final_checkpoint));

    std::ifstream csv(dir / "metrics.csv");
    std::string line;
    std::getline(csv, line);
    EXPECT_EQ(line, "step,epoch,d_loss,g_loss,d_real,d_fake,wall_ms");
    int rows = 0;
    while (std::getline(csv, line)) ++rows;
    EXPECT_EQ(rows, 4);
}

TEST(Fit, SameSeedSameMetrics) {
    const auto ds = data::generate_toy_dataset(small_spec(), 48, 3);
    Checkpoint a(small_model(), small_training(16, 2));
    Checkpoint b(small_model(), small_training(16, 2));
    const auto ra = fit(a, ds);
    const auto rb = fit(b, ds);
    ASSERT_EQ(ra.steps.size(), rb.steps.size());
    for (std::size_t k = 0; k < ra.steps.size(); ++k) {
        EXPECT_EQ(ra.steps[k].d_loss, rb.steps[k].d_loss);
        EXPECT_EQ(ra.steps[k].g_loss, rb.steps[k].g_loss);
    }
    EXPECT_TRUE(same_parameters(a.generator.parameters(), b.generator.parameters()));
}

// ---------------------------------------------------------------------------
// Checkpoints

TEST(CheckpointFile, RoundTripIsBitExact) {
    const auto ds = data::generate_toy_dataset(small_spec(), 16, 3);
    Checkpoint ck(small_model(), small_training());
    train_step(ck, pointers(ds, 16)); // non-trivial optimizer moments
    const auto path = scratch_dir("roundtrip") / "a.ckpt";
    save_checkpoint(ck, path);
    const Checkpoint back = load_checkpoint(path);

    auto& mutable_back = const_cast<Checkpoint&>(back);
    EXPECT_TRUE(same_parameters(ck.generator.parameters(), mutable_back.generator.parameters()));
    EXPECT_TRUE(same_parameters(ck.discriminator.parameters(), mutable_back.discriminator.parameters()));
    ASSERT_EQ(ck.adam_g.first_moment.size(), back.adam_g.first_moment.size());
    for (std::size_t i = 0; i < ck.adam_g.first_moment.size(); ++i) {
        EXPECT_EQ(ck.adam_g.first_moment[i].storage(), back.adam_g.first_moment[i].storage());
        EXPECT_EQ(ck.adam_g.second_moment[i].storage(), back.adam_g.second_moment[i].storage());
    }
    for (std::size_t i = 0; i < ck.adam_d.first_moment.size(); ++i) {
        EXPECT_EQ(ck.adam_d.first_moment[i].storage(), back.adam_d.first_moment[i].storage());
    }
    EXPECT_EQ(back.step, ck.step);
    EXPECT_EQ(back.epoch, ck.epoch);
    EXPECT_EQ(back.adam_g.steps(), ck.adam_g.steps());
    EXPECT_EQ(back.rng, ck.rng);
    EXPECT_EQ(back.model.to_json(), ck.model.to_json());
    EXPECT_EQ(back.training.to_json(), ck.training.to_json());

    // Reloaded networks reproduce forward passes bit for bit.
    model::ConditioningBatch cond(16, 19, 40, 100);
    cond.resize(2);
    std::vector<float> z(100, 0.25f);
    for (int i = 0; i < 2; ++i) cond.set(i, &ds[i].layout, &ds[i].attributes, z);
    EXPECT_EQ(ck.generator.forward(cond.input()).storage(), back.generator.forward(cond.input()).storage());

    // Saving the reloaded state gives the same bytes.
    const auto again = path.parent_path() / "b.ckpt";
    save_checkpoint(back, again);
    EXPECT_EQ(file_sha256(path), file_sha256(again));
}

TEST(CheckpointFile, TruncatedFileIsRejected) {
    Checkpoint ck(small_model(), small_training());
    const auto dir = scratch_dir("truncated");
    save_checkpoint(ck, dir / "full.ckpt");
    const auto size = std::filesystem::file_size(dir / "full.ckpt");
    for (std::uintmax_t keep : {std::uintmax_t{4}, std::uintmax_t{20}, size / 2, size - 1}) {
        std::filesystem::copy_file(dir / "full.ckpt", dir / "cut.ckpt",
                                   std::filesystem::copy_options::overwrite_existing);
        std::filesystem::resize_file(dir / "cut.ckpt", keep);
        EXPECT_THROW(load_checkpoint(dir / "cut.ckpt"), Error) << keep;
    }
    EXPECT_THROW(load_checkpoint(dir / "missing.ckpt"), IoError);
}

TEST(CheckpointFile, VersionMismatchIsRejected) {
    Checkpoint ck(small_model(), small_training());
    const auto path = scratch_dir("version") / "v.ckpt";
    save_checkpoint(ck, path);
    {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(8); // after the magic
        const std::uint32_t bumped = kCheckpointVersion + 1;
        f.write(reinterpret_cast<const char*>(&bumped), sizeof bumped);
    }
    try {
        load_checkpoint(path);
        FAIL() << "expected rejection";
    } catch (const ValidationError& e) {
        EXPECT_EQ(e.field(), "version");
    }
}

TEST(CheckpointFile, ResumeReproducesUninterruptedRun) {
    const auto ds = data::generate_toy_dataset(small_spec(), 48, 3);
    const auto dir = scratch_dir("resume");

    Checkpoint full(small_model(), small_training(16, 3));
    const auto rf = fit(full, ds);

    Checkpoint first(small_model(), small_training(16, 1));
    fit(first, ds, {dir, {}});
    Checkpoint resumed = load_checkpoint(dir / "checkpoint.ckpt");
    EXPECT_EQ(resumed.epoch, 1);
    resumed.training.epochs = 3;
    const auto rr = fit(resumed, ds, {dir, {}});

    ASSERT_EQ(rr.steps.size(), 6u);
    for (std::size_t k = 0; k < rr.steps.size(); ++k) {
        EXPECT_EQ(rr.steps[k].step, rf.steps[k + 3].step);
        EXPECT_EQ(rr.steps[k].d_loss, rf.steps[k + 3].d_loss);
        EXPECT_EQ(rr.steps[k].g_loss, rf.steps[k + 3].g_loss);
    }
    EXPECT_TRUE(same_parameters(full.generator.parameters(), resumed.generator.parameters()));
    EXPECT_TRUE(same_parameters(full.discriminator.parameters(), resumed.discriminator.parameters()));

    // metrics.csv continued rather than restarted.
    std::ifstream csv(dir / "metrics.csv");
    std::string line;
    int rows = -1;
    while (std::getline(csv, line)) ++rows;
    EXPECT_EQ(rows, 9);
}
