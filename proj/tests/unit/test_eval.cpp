#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "alcgan/data/png_io.hpp"
#include "alcgan/data/toy.hpp"
#include "alcgan/eval/ablation.hpp"
#include "alcgan/eval/base64.hpp"
#include "alcgan/eval/drivers.hpp"
#include "alcgan/eval/grid.hpp"
#include "alcgan/eval/toy_metrics.hpp"
#include "alcgan/train/checkpoint.hpp"

using namespace alcgan;
using namespace alcgan::eval;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("alcgan_eval_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

data::ToySceneSpec spec16() {
    auto s = data::ToySceneSpec::defaults();
    s.resolution = 16;
    return s;
}

train::Checkpoint small_checkpoint(model::VariantKind variant = model::VariantKind::AL, std::uint64_t seed = 3) {
    const auto base = model::scaled_model_config(16, 1.0 / 16.0);
    train::TrainingConfig t;
    t.seed = seed;
    t.variant = variant;
    return train::Checkpoint(model::make_variant(variant, base.generator, base.discriminator), t);
}

Probe toy_probe(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const auto spec = spec16();
    return {data::random_toy_layout(spec, rng), data::random_toy_attributes(spec, rng), seed};
}

std::vector<std::uint8_t> rect_mask(int size, int y0, int y1, int x0, int x1) {
    std::vector<std::uint8_t> m(static_cast<std::size_t>(size) * size, 0);
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) m[y * size + x] = 1;
    return m;
}

bool one_hot(const data::SemanticLayout& l) {
    const auto dense = l.dense();
    const std::size_t plane = static_cast<std::size_t>(l.height()) * l.width();
    for (std::size_t p = 0; p < plane; ++p) {
        int s = 0;
        for (int c = 0; c < 19; ++c) s += dense[c * plane + p];
        if (s != 1) return false;
    }
    return true;
}

} // namespace

// ---------------------------------------------------------------------------

TEST(Base64, RoundTripAndRejection) {
    for (std::size_t n : {0u, 1u, 2u, 3u, 4u, 5u, 31u, 64u}) {
        data::Bytes b(n);
        for (std::size_t i = 0; i < n; ++i) b[i] = static_cast<std::uint8_t>(i * 37 + 11);
        EXPECT_EQ(base64_decode(base64_encode(b)), b) << n;
    }
    EXPECT_EQ(base64_encode(data::Bytes{'M', 'a', 'n'}), "TWFu");
    EXPECT_EQ(base64_encode(data::Bytes{'M', 'a'}), "TWE=");
    EXPECT_THROW(base64_decode("abc"), ValidationError);
    EXPECT_THROW(base64_decode("ab!d"), ValidationError);
}

// ---------------------------------------------------------------------------
// Generation

TEST(Generate, DeterministicAndInRange) {
    auto ck = small_checkpoint();
    const auto p = toy_probe(5);
    const auto a = generate_image(ck.generator, p);
    const auto b = generate_image(ck.generator, p);
    EXPECT_EQ(a, b);
    for (float v : a.pixels) ASSERT_TRUE(v >= -1.0f && v <= 1.0f);
    auto q = p;
    q.seed = 6;
    EXPECT_NE(generate_image(ck.generator, q), a);
}

TEST(Generate, NonFiniteWeightsAreRejected) {
    auto ck = small_checkpoint();
    auto params = ck.generator.parameters();
    (*params[0].value)[0] = std::nanf("");
    const auto p = toy_probe(1);
    EXPECT_THROW(require_finite_weights(ck.generator), ValidationError);
    SweepRequest req{p.layout, p.attributes, 2, {0.0, 1.0}, 1};
    EXPECT_THROW(attribute_sweep(ck.generator, req), ValidationError);
}

TEST(Generate, AttributeOnlyVariantIgnoresLayout) {
    auto ck = small_checkpoint(model::VariantKind::A_ONLY);
    auto p = toy_probe(8);
    const auto a = generate_image(ck.generator, p);
    p.layout = toy_probe(9).layout;
    EXPECT_EQ(generate_image(ck.generator, p), a);
}

// ---------------------------------------------------------------------------
// Sweeps and grids

TEST(Sweep, OneImagePerStrength) {
    auto ck = small_checkpoint();
    const auto p = toy_probe(2);
    SweepRequest req{p.layout, p.attributes, 2, {0.0, 0.25, 0.5, 0.75, 1.0}, 7};
    const auto r = attribute_sweep(ck.generator, req);
    EXPECT_EQ(r.rows, 1);
    EXPECT_EQ(r.cols, 5);
    ASSERT_EQ(r.cells.size(), 5u);
    for (int c = 0; c < 5; ++c) {
        EXPECT_FLOAT_EQ(r.at(0, c).probe.attributes[2], static_cast<float>(req.strengths[c]));
        for (int k = 0; k < 40; ++k) {
            if (k != 2) {
                ASSERT_EQ(r.at(0, c).probe.attributes[k], p.attributes[k]);
            }
        }
    }
    EXPECT_EQ(r.col_labels.front(), "0.00");
}

TEST(Sweep, BaseStrengthReproducesBaseImage) {
    auto ck = small_checkpoint();
    const auto p = toy_probe(4);
    SweepRequest req{p.layout, p.attributes, 3, {p.attributes[3]}, p.seed};
    const auto r = attribute_sweep(ck.generator, req);
    EXPECT_EQ(r.at(0, 0).image, generate_image(ck.generator, p));
}

TEST(Sweep, RequestValidation) {
    auto ck = small_checkpoint();
    const auto p = toy_probe(4);
    SweepRequest req{p.layout, p.attributes, 2, {0.5, 0.25}, 1};
    try {
        attribute_sweep(ck.generator, req);
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_EQ(e.field(), "strengths[1]");
    }
    req.strengths = {0.0, 1.5};
    EXPECT_THROW(attribute_sweep(ck.generator, req), ValidationError);
    req.strengths = {};
    EXPECT_THROW(attribute_sweep(ck.generator, req), ValidationError);
    req.strengths = {0.5};
    req.attribute_index = 40;
    EXPECT_THROW(attribute_sweep(ck.generator, req), ValidationError);
}

TEST(NoiseGrid, ShapeAndIdenticalSeedColumns) {
    auto ck = small_checkpoint();
    const auto p = toy_probe(3);
    std::vector<data::AttributeVector> rows;
    for (int i = 0; i < 4; ++i) {
        data::AttributeVector a;
        a.set(2, 0.25 * i);
        rows.push_back(a);
    }
    const std::vector<std::uint64_t> seeds{1, 2, 3, 2, 5, 6};
    const auto r = noise_grid(ck.generator, p.layout, rows, seeds);
    EXPECT_EQ(r.rows, 4);
    EXPECT_EQ(r.cols, 6);
    EXPECT_EQ(r.cells.size(), 24u);
    for (int row = 0; row < 4; ++row) {
        EXPECT_EQ(r.at(row, 1).image, r.at(row, 3).image);
        EXPECT_NE(r.at(row, 1).image, r.at(row, 2).image);
    }
}

// ---------------------------------------------------------------------------
// Edit scripts

TEST(EditScript, EmptyScriptReturnsOriginal) {
    const auto l = toy_probe(1).layout;
    const auto out = apply_edit_script(l, {});
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0], l);
}

TEST(EditScript, SuccessiveAddsChangeOnlyTheirRegion) {
    const auto original = data::encode_layout(data::IndexMap(16, 16, 0));
    const int mountain = 4, water = 11;
    const std::vector<LayoutEdit> script{{rect_mask(16, 4, 10, 0, 16), mountain, EditOp::Add},
                                         {rect_mask(16, 10, 16, 3, 12), water, EditOp::Add}};
    const auto out = apply_edit_script(original, script);
    ASSERT_EQ(out.size(), 3u);
    for (std::size_t step = 1; step < out.size(); ++step) {
        EXPECT_TRUE(one_hot(out[step]));
        const auto& mask = script[step - 1].mask;
        for (int y = 0; y < 16; ++y)
            for (int x = 0; x < 16; ++x) {
                if (mask[y * 16 + x]) {
                    ASSERT_EQ(out[step].label(y, x), script[step - 1].label);
                } else {
                    ASSERT_EQ(out[step].label(y, x), out[step - 1].label(y, x));
                }
            }
    }
}

TEST(EditScript, AddThenRemoveRestoresOriginal) {
    const auto original = toy_probe(12).layout;
    const auto region = rect_mask(16, 2, 9, 5, 14);
    const auto overlap = rect_mask(16, 6, 12, 0, 8);
    const std::vector<LayoutEdit> script{{region, 3, EditOp::Add},
                                         {overlap, 5, EditOp::Add},
                                         {overlap, 5, EditOp::Remove},
                                         {region, 3, EditOp::Remove}};
    const auto out = apply_edit_script(original, script);
    EXPECT_NE(out[2], out[1]);
    EXPECT_EQ(out[3], out[1]);
    EXPECT_EQ(out.back(), original);
    for (const auto& l : out) EXPECT_TRUE(one_hot(l));
}

TEST(EditScript, RemoveWithoutHistoryUsesBackground) {
    const auto original = data::encode_layout(data::IndexMap(16, 16, 1));
    const std::vector<LayoutEdit> script{{rect_mask(16, 0, 4, 0, 4), 1, EditOp::Remove}};
    const auto out = apply_edit_script(original, script, 0);
    EXPECT_EQ(out.back().label(0, 0), 0);
    EXPECT_EQ(out.back().label(5, 5), 1);
}

TEST(EditScript, InvalidStepIsNamed) {
    const auto original = data::encode_layout(data::IndexMap(16, 16, 0));
    const std::vector<LayoutEdit> script{{rect_mask(16, 0, 4, 0, 4), 2, EditOp::Add},
                                         {rect_mask(16, 0, 4, 0, 4), 19, EditOp::Add}};
    try {
        apply_edit_script(original, script);
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_EQ(e.field(), "edits[1].class");
    }
    const std::vector<LayoutEdit> bad_mask{{rect_mask(8, 0, 4, 0, 4), 2, EditOp::Add}};
    try {
        apply_edit_script(original, bad_mask);
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_EQ(e.field(), "edits[0].mask");
    }
}

TEST(EditScript, LoadsJsonWithMaskFiles) {
    const auto dir = scratch_dir("edits");
    data::RgbBytes mask{16, 16, std::vector<std::uint8_t>(16 * 16 * 3, 0)};
    for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 16; ++x) mask.data[(y * 16 + x) * 3 + 1] = 255;
    data::write_png_rgb(dir / "top.png", mask);
    std::ofstream(dir / "script.json")
        << R"([{"mask_png": "top.png", "class": "mountain", "op": "add"},
              {"mask_png": "top.png", "class": 4, "op": "remove"}])";
    const auto edits = load_edit_script(dir / "script.json", 16);
    ASSERT_EQ(edits.size(), 2u);
    EXPECT_EQ(edits[0].label, 4);
    EXPECT_EQ(edits[0].op, EditOp::Add);
    EXPECT_EQ(edits[1].op, EditOp::Remove);
    EXPECT_EQ(std::count(edits[0].mask.begin(), edits[0].mask.end(), 1), 80);

    std::ofstream(dir / "bad.json") << R"([{"mask_png": "top.png", "class": "spaceship", "op": "add"}])";
    try {
        load_edit_script(dir / "bad.json", 16);
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_EQ(e.field(), "edits[0].class");
    }
    std::ofstream(dir / "op.json") << R"([{"mask_png": "top.png", "class": 1, "op": "paint"}])";
    EXPECT_THROW(load_edit_script(dir / "op.json", 16), ValidationError);
    EXPECT_THROW(load_edit_script(dir / "script.json", 32), ValidationError);
}

// ---------------------------------------------------------------------------
// Nearest neighbour

TEST(Nearest, MatchesBruteForceScan) {
    const auto train = data::generate_toy_dataset(spec16(), 100, 21);
    const auto queries = data::generate_toy_dataset(spec16(), 20, 22);
    for (const auto& q : queries) {
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < train.size(); ++i) {
            double d = 0.0;
            for (int c = 0; c < 3; ++c)
                for (int y = 0; y < 16; ++y)
                    for (int x = 0; x < 16; ++x)
                        d += std::fabs(double(q.image.at(c, y, x)) - double(train[i].image.at(c, y, x)));
            if (d < best_d) {
                best_d = d;
                best = i;
            }
        }
        const auto m = nearest_training_image(q.image, train);
        EXPECT_EQ(m.index, best);
        EXPECT_NEAR(m.distance, best_d, 1e-9 * best_d);
    }
}

TEST(Nearest, MemberQueryAndUniformShift) {
    const auto train = data::generate_toy_dataset(spec16(), 100, 23);
    const auto m = nearest_training_image(train[37].image, train);
    EXPECT_EQ(m.index, 37u);
    EXPECT_EQ(m.distance, 0.0);

    auto shifted = train[37].image;
    for (float& v : shifted.pixels) v += 0.1f;
    EXPECT_NEAR(l1_distance(shifted, train[37].image), 0.1 * 16 * 16 * 3, 1e-3);

    // Flat images 0.3 apart: a 0.1 shift cannot bring another one closer.
    std::vector<data::SceneSample> flat(6);
    for (int i = 0; i < 6; ++i) flat[i].image = data::Image(16, 16, -0.9f + 0.3f * i);
    auto q = flat[4].image;
    for (float& v : q.pixels) v += 0.1f;
    const auto s = nearest_training_image(q, flat);
    EXPECT_EQ(s.index, 4u);
    EXPECT_NEAR(s.distance, 0.1 * 16 * 16 * 3, 1e-3);
}

TEST(Nearest, TiesKeepManifestOrder) {
    auto train = data::generate_toy_dataset(spec16(), 5, 24);
    train[3] = train[1];
    const auto m = nearest_training_image(train[1].image, train);
    EXPECT_EQ(m.index, 1u);
}

TEST(Nearest, ResolutionMismatchAndEmpty) {
    const auto train = data::generate_toy_dataset(spec16(), 3, 25);
    EXPECT_THROW(nearest_training_image(data::Image(8, 8), train), ValidationError);
    EXPECT_THROW(nearest_training_image(train[0].image, std::span<const data::SceneSample>()), ValidationError);
}

TEST(Nearest, StreamingManifestAgreesWithMemory) {
    const auto dir = scratch_dir("nearest");
    const auto train = data::generate_toy_dataset(spec16(), 12, 26);
    std::vector<data::ManifestRecord> records;
    for (std::size_t i = 0; i < train.size(); ++i) {
        const std::string stem = "s" + std::to_string(i);
        data::write_png_rgb(dir / (stem + ".png"), data::quantize_image(train[i].image));
        data::write_png_indexed(dir / (stem + "_l.png"), data::decode_layout(train[i].layout));
        records.push_back({stem + ".png", stem + "_l.png", train[i].attributes, "g", 0});
    }
    data::write_manifest(dir / "m.jsonl", records);
    const auto manifest = data::load_manifest(dir / "m.jsonl", {.resolution = 16, .coverage_threshold = 0.0});
    const auto loaded = data::load_samples(manifest);
    for (std::size_t q = 0; q < loaded.size(); q += 3) {
        const auto a = nearest_training_image(loaded[q].image, manifest);
        const auto b = nearest_training_image(loaded[q].image, loaded);
        EXPECT_EQ(a.index, q);
        EXPECT_EQ(a.distance, 0.0);
        EXPECT_EQ(a.index, b.index);
    }
}

// ---------------------------------------------------------------------------
// Export

TEST(Export, MontageAndSidecarRegenerateBitIdentically) {
    const auto dir = scratch_dir("export");
    auto ck = small_checkpoint();
    train::save_checkpoint(ck, dir / "g.ckpt");
    const ModelSource src{(dir / "g.ckpt").string(), train::file_sha256(dir / "g.ckpt"), "AL"};

    const auto p = toy_probe(31);
    std::vector<data::AttributeVector> rows(2, p.attributes);
    rows[1].set(2, 1.0);
    const std::vector<std::uint64_t> seeds{4, 9};
    const auto report = noise_grid(ck.generator, p.layout, rows, seeds, src, {"base", "night"});
    const auto sidecar = export_grid(report, dir / "grid.png");
    ASSERT_TRUE(fs::exists(dir / "grid.png"));
    ASSERT_EQ(sidecar, dir / "grid.json");

    const auto montage = data::read_png_rgb(dir / "grid.png");
    const int scale = montage_scale(report);
    EXPECT_EQ(montage.width, 2 + (4 * 5 - 1 + 3) + 2 * (16 * scale + 2));
    EXPECT_EQ(montage.height, 2 + (5 + 3) + 2 * (16 * scale + 2));
    // Top-left pixel of cell (1,1) is the cell's top-left image pixel.
    const auto cell = data::quantize_image(report.at(1, 1).image);
    const int x0 = 2 + 22 + (16 * scale + 2), y0 = 2 + 8 + (16 * scale + 2);
    for (int ch = 0; ch < 3; ++ch) EXPECT_EQ(montage.data[(y0 * montage.width + x0) * 3 + ch], cell.data[ch]);

    const auto again = regenerate_grid(sidecar);
    ASSERT_EQ(again.cells.size(), report.cells.size());
    for (std::size_t i = 0; i < again.cells.size(); ++i) EXPECT_EQ(again.cells[i].image, report.cells[i].image);
    export_grid(again, dir / "again.png");
    EXPECT_EQ(data::read_file(dir / "again.png"), data::read_file(dir / "grid.png"));
}

TEST(Export, ChangedCheckpointIsDetected) {
    const auto dir = scratch_dir("export_changed");
    auto ck = small_checkpoint();
    train::save_checkpoint(ck, dir / "g.ckpt");
    const ModelSource src{(dir / "g.ckpt").string(), train::file_sha256(dir / "g.ckpt"), "AL"};
    const auto p = toy_probe(2);
    const auto report = attribute_sweep(ck.generator, {p.layout, p.attributes, 2, {0.0, 1.0}, 3}, src);
    const auto sidecar = export_grid(report, dir / "s.png");
    train::save_checkpoint(small_checkpoint(model::VariantKind::AL, 99), dir / "g.ckpt");
    EXPECT_THROW(regenerate_grid(sidecar), ValidationError);
}

TEST(Export, EmptyReportAndUnwritablePath) {
    EXPECT_THROW(export_grid(GridReport{}, scratch_dir("empty") / "x.png"), ValidationError);
    auto ck = small_checkpoint();
    const auto p = toy_probe(2);
    const auto report = attribute_sweep(ck.generator, {p.layout, p.attributes, 2, {0.5}, 3});
    const auto dir = scratch_dir("unwritable");
    std::ofstream(dir / "file") << "x";
    EXPECT_THROW(export_grid(report, dir / "file" / "grid.png"), IoError);
}

// ---------------------------------------------------------------------------
// Toy metrics

TEST(ToyMetrics, ColorErrorAndLuminance) {
    auto spec = spec16();
    spec.noise_sigma = 0.0;
    const auto s = data::generate_toy_dataset(spec, 1, 40)[0];
    EXPECT_EQ(segment_color_error(s.image, s.layout, s.image), 0.0);
    auto shifted = s.image;
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) {
            shifted.at(0, y, x) += 0.1f;
            shifted.at(2, y, x) -= 0.2f;
        }
    EXPECT_NEAR(segment_color_error(shifted, s.layout, s.image), std::sqrt(0.01 + 0.04), 1e-6);

    data::Image flat(16, 16);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) {
            flat.at(0, y, x) = 0.5f;
            flat.at(1, y, x) = -0.5f;
            flat.at(2, y, x) = 1.0f;
        }
    EXPECT_NEAR(segment_luminance(flat, s.layout, 0), 0.299 * 0.5 - 0.587 * 0.5 + 0.114, 1e-6);
    EXPECT_TRUE(std::isnan(segment_luminance(flat, s.layout, 5)));
}

TEST(ToyMetrics, OracleNightSweepIsMonotone) {
    // The oracle itself must pass the sweep criterion on every layout.
    auto spec = data::ToySceneSpec::defaults();
    std::mt19937_64 rng(1);
    for (int i = 0; i < 50; ++i) {
        const auto layout = data::random_toy_layout(spec, rng);
        auto a = data::random_toy_attributes(spec, rng);
        double prev = 1e9;
        for (double s : {0.0, 0.25, 0.5, 0.75, 1.0}) {
            a.set(2, s);
            const double luma = segment_luminance(data::render_toy(layout, a, spec), layout, 0);
            ASSERT_LT(luma, prev);
            prev = luma;
        }
    }
}

TEST(ToyMetrics, EvaluateUntrainedGenerator) {
    auto ck = small_checkpoint();
    ToyEvalOptions opt;
    opt.layouts = 5;
    const auto ev = evaluate_toy(ck.generator, spec16(), opt);
    EXPECT_EQ(ev.layout_errors.size(), 5u);
    EXPECT_TRUE(std::isfinite(ev.color_error));
    EXPECT_GT(ev.color_error, 0.0);
    EXPECT_GE(ev.sweep_monotone_fraction, 0.0);
    EXPECT_LE(ev.sweep_monotone_fraction, 1.0);
    const auto again = evaluate_toy(ck.generator, spec16(), opt);
    EXPECT_EQ(again.layout_errors, ev.layout_errors);
    EXPECT_THROW(evaluate_toy(ck.generator, data::ToySceneSpec::defaults(), opt), ValidationError);
}

// ---------------------------------------------------------------------------
// Ablation

TEST(Ablation, ThreeVariantsOnSharedProbes) {
    const auto dir = scratch_dir("ablation");
    const auto data = data::generate_toy_dataset(spec16(), 32, 50);
    AblationOptions opt;
    opt.base_model = model::scaled_model_config(16, 1.0 / 16.0);
    opt.training.batch_size = 16;
    opt.training.epochs = 1;
    opt.training.seed = 4;
    opt.probes = {toy_probe(1), toy_probe(2)};
    opt.out_dir = dir;
    opt.toy = spec16();
    opt.toy_eval.layouts = 3;
    const auto r = ablation_compare(data, opt);
    ASSERT_EQ(r.outcomes.size(), 3u);
    EXPECT_EQ(r.grid.rows, 3);
    EXPECT_EQ(r.grid.cols, 2);
    EXPECT_EQ(r.grid.row_labels, (std::vector<std::string>{"AL", "A_ONLY", "L_ONLY"}));
    for (const auto& o : r.outcomes) {
        EXPECT_TRUE(o.trained) << o.error;
        EXPECT_TRUE(fs::exists(o.checkpoint));
        ASSERT_TRUE(o.toy.has_value());
    }
    for (int row = 0; row < 3; ++row) {
        EXPECT_EQ(r.grid.at(row, 0).probe.seed, opt.probes[0].seed);
        EXPECT_EQ(r.grid.at(row, 1).probe.layout, opt.probes[1].layout);
    }
    const auto a_only = train::load_checkpoint(r.outcomes[1].checkpoint);
    EXPECT_EQ(a_only.model.generator.layout_channels, 0);
    EXPECT_EQ(a_only.model.generator.input_channels(), 140);

    write_ablation_csv(r, dir / "ablation.csv");
    std::ifstream in(dir / "ablation.csv");
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "variant,status,train_seconds,color_error,sweep_monotone_fraction,checkpoint");
    int ok = 0;
    while (std::getline(in, line)) ok += line.find(",ok,") != std::string::npos;
    EXPECT_EQ(ok, 3);

    const auto regenerated = regenerate_grid(export_grid(r.grid, dir / "ablation.png"));
    for (std::size_t i = 0; i < regenerated.cells.size(); ++i) EXPECT_EQ(regenerated.cells[i].image, r.grid.cells[i].image);
}

TEST(Ablation, FailedVariantIsReportedNotThrown) {
    const auto data = data::generate_toy_dataset(spec16(), 8, 51); // fewer than one batch
    AblationOptions opt;
    opt.base_model = model::scaled_model_config(16, 1.0 / 16.0);
    opt.training.batch_size = 16;
    opt.training.epochs = 1;
    opt.variants = {model::VariantKind::AL, model::VariantKind::L_ONLY};
    opt.probes = {toy_probe(1)};
    const auto r = ablation_compare(data, opt);
    ASSERT_EQ(r.outcomes.size(), 2u);
    for (const auto& o : r.outcomes) {
        EXPECT_FALSE(o.trained);
        EXPECT_FALSE(o.error.empty());
    }
    EXPECT_EQ(r.grid.rows, 0);
}
