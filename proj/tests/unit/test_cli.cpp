#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include <json.hpp>

#include "alcgan/cli/cli.hpp"
#include "alcgan/data/png_io.hpp"
#include "alcgan/eval/base64.hpp"
#include "alcgan/eval/grid.hpp"
#include "alcgan/train/checkpoint.hpp"

using namespace alcgan;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "alcgan");
    args.insert(args.begin() + 1, {"--log-level", "warn"});
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

data::Bytes file_bytes(const fs::path& p) { return data::read_file(p); }

/// A toy dataset and a one-epoch run shared by the tests below.
const fs::path& workdir() {
    static const fs::path dir = [] {
        const auto d = fs::temp_directory_path() / ("alcgan_cli_" + std::to_string(::getpid()));
        fs::remove_all(d);
        fs::create_directories(d);
        auto r = run({"make-toy-data", "--out", (d / "toy").string(), "--count", "40", "--resolution", "16",
                      "--seed", "2"});
        EXPECT_EQ(r.code, 0) << r.err;
        std::ofstream(d / "run.json")
            << R"({"model": {"scaled": {"resolution": 16, "channel_multiplier": 0.0625}},
                  "training": {"batch_size": 16, "epochs": 1, "seed": 9}})";
        r = run({"train", "--data", (d / "toy/toy.manifest").string(), "--config", (d / "run.json").string(), "--out",
                 (d / "run").string()});
        EXPECT_EQ(r.code, 0) << r.err;
        return d;
    }();
    return dir;
}

std::string path(const std::string& rel) { return (workdir() / rel).string(); }

} // namespace

TEST(Cli, MakeToyDataWritesManifest) {
    std::ifstream in(workdir() / "toy/toy.manifest");
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
        const auto rec = json::parse(line);
        EXPECT_TRUE(fs::exists(workdir() / "toy" / rec.at("image").get<std::string>()));
        EXPECT_TRUE(fs::exists(workdir() / "toy" / rec.at("layout").get<std::string>()));
        EXPECT_EQ(rec.at("attributes").size(), 40u);
        ++n;
    }
    EXPECT_EQ(n, 40);
    EXPECT_TRUE(fs::exists(workdir() / "toy/toy_spec.json"));
}

TEST(Cli, TrainWritesCheckpointAndMetrics) {
    EXPECT_TRUE(fs::exists(workdir() / "run/checkpoint.ckpt"));
    EXPECT_TRUE(fs::exists(workdir() / "run/config.json"));
    std::ifstream in(workdir() / "run/metrics.csv");
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "step,epoch,d_loss,g_loss,d_real,d_fake,wall_ms");
    int rows = 0;
    for (std::string l; std::getline(in, l);) ++rows;
    EXPECT_EQ(rows, 2); // 40 samples, batch 16, partial batch dropped
    EXPECT_EQ(train::load_checkpoint(workdir() / "run/checkpoint.ckpt").epoch, 1);
}

TEST(Cli, ResumeContinuesOnOtherData) {
    fs::copy_file(workdir() / "run/checkpoint.ckpt", workdir() / "base.ckpt", fs::copy_options::overwrite_existing);
    auto r = run({"make-toy-data", "--out", path("toy2"), "--count", "32", "--resolution", "16", "--seed", "5"});
    ASSERT_EQ(r.code, 0) << r.err;
    r = run({"train", "--data", path("toy2/toy.manifest"), "--resume", path("base.ckpt"), "--epochs", "2", "--out",
             path("tuned")});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto tuned = train::load_checkpoint(workdir() / "tuned/checkpoint.ckpt");
    EXPECT_EQ(tuned.epoch, 2);
    EXPECT_EQ(tuned.step, 2 + 2);
}

TEST(Cli, GenerateIsDeterministic) {
    const std::vector<std::string> common{"generate", "--ckpt", path("run/checkpoint.ckpt"), "--layout",
                                          path("toy/layouts/00003.png"), "--attrs", R"({"night": 0.8})", "--seed", "7"};
    auto a = common, b = common;
    a.insert(a.end(), {"--out", path("gen/a.png")});
    b.insert(b.end(), {"--out", path("gen/b.png")});
    ASSERT_EQ(run(a).code, 0);
    ASSERT_EQ(run(b).code, 0);
    EXPECT_EQ(file_bytes(workdir() / "gen/a.png"), file_bytes(workdir() / "gen/b.png"));

    // The same attributes as a 40-entry list give the same image.
    std::vector<double> list(40, 0.0);
    list[2] = 0.8;
    std::ofstream(workdir() / "attrs.json") << json(list).dump();
    auto c = common;
    c[6] = path("attrs.json");
    c.insert(c.end(), {"--out", path("gen/c.png")});
    ASSERT_EQ(run(c).code, 0);
    EXPECT_EQ(file_bytes(workdir() / "gen/a.png"), file_bytes(workdir() / "gen/c.png"));
}

TEST(Cli, NearestFindsManifestMember) {
    const auto r = run({"nearest", "--ckpt", path("run/checkpoint.ckpt"), "--query", path("toy/images/00017.png"),
                        "--data", path("toy/toy.manifest"), "--out", path("nearest.json")});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto doc = json::parse(r.out);
    EXPECT_EQ(doc.at("index"), 17);
    EXPECT_EQ(doc.at("distance"), 0.0);
    EXPECT_TRUE(fs::exists(workdir() / "nearest.json"));
}

TEST(Cli, SweepExportRegenerates) {
    const auto r = run({"sweep", "--ckpt", path("run/checkpoint.ckpt"), "--layout", path("toy/layouts/00001.png"),
                        "--attribute", "night", "--strengths", "0,0.5,1", "--out", path("sweep/night.png")});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto report = eval::regenerate_grid(workdir() / "sweep/night.json");
    EXPECT_EQ(report.cols, 3);
    const auto montage = eval::render_montage(report, eval::montage_scale(report));
    EXPECT_EQ(data::encode_png_rgb(montage), file_bytes(workdir() / "sweep/night.png"));
}

TEST(Cli, SessionReplayMatchesEditScript) {
    // Mask: lower-left block.
    data::RgbBytes mask;
    mask.width = mask.height = 16;
    mask.data.assign(16 * 16 * 3, 0);
    for (int y = 9; y < 16; ++y)
        for (int x = 0; x < 7; ++x)
            for (int c = 0; c < 3; ++c) mask.data[(y * 16 + x) * 3 + c] = 255;
    data::write_png_rgb(workdir() / "mask.png", mask);
    std::ofstream(workdir() / "edits.json")
        << R"([{"mask_png": "mask.png", "class": "tree", "op": "add"}, {"mask_png": "mask.png", "class": 5, "op": "add"}])";

    auto r = run({"edit", "--ckpt", path("run/checkpoint.ckpt"), "--layout", path("toy/layouts/00002.png"), "--script",
                  path("edits.json"), "--attrs", R"({"fog": 0.4})", "--seed", "3", "--out", path("edit_script")});
    ASSERT_EQ(r.code, 0) << r.err;

    const auto mask_b64 = eval::base64_encode(data::encode_png_rgb(mask));
    std::vector<double> attrs(40, 0.0);
    attrs[7] = 0.4;
    const json session{
        {"layout", eval::base64_encode(data::read_file(workdir() / "toy/layouts/00002.png"))},
        {"attributes", attrs},
        {"seed", 3},
        {"history",
         {{{"mask", mask_b64}, {"class", "tree"}, {"op", "add"}}, {{"mask", mask_b64}, {"class", 5}, {"op", "add"}}}}};
    std::ofstream(workdir() / "session.json") << session.dump();
    r = run({"edit", "--ckpt", path("run/checkpoint.ckpt"), "--session", path("session.json"), "--out",
             path("edit_session")});
    ASSERT_EQ(r.code, 0) << r.err;
    for (int i = 0; i < 3; ++i) {
        const auto name = "step_0" + std::to_string(i) + ".png";
        EXPECT_EQ(file_bytes(workdir() / "edit_script" / name), file_bytes(workdir() / "edit_session" / name)) << name;
    }
}

TEST(Cli, UsageErrorsExitTwo) {
    EXPECT_EQ(run({}).code, 2);
    EXPECT_EQ(run({"no-such-command"}).code, 2);
    const auto r = run({"generate", "--seed", "1"});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("--ckpt"), std::string::npos);
    EXPECT_EQ(run({"generate", "--ckpt", path("run/checkpoint.ckpt"), "--seed", "x", "--out", "o.png"}).code, 2);
    EXPECT_EQ(run({"--help"}).code, 0);
}

TEST(Cli, OperationFailuresExitOne) {
    auto r = run({"generate", "--ckpt", path("run/checkpoint.ckpt"), "--layout", path("toy/layouts/00003.png"),
                  "--attrs", R"({"night": 1.5})", "--out", path("gen/bad.png")});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("attrs.night"), std::string::npos) << r.err;

    r = run({"generate", "--ckpt", path("run/checkpoint.ckpt"), "--out", path("gen/bad.png")});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("layout"), std::string::npos);

    std::ofstream(workdir() / "broken.ckpt") << "not a checkpoint";
    r = run({"generate", "--ckpt", path("broken.ckpt"), "--layout", path("toy/layouts/00003.png"), "--out",
             path("gen/bad.png")});
    EXPECT_EQ(r.code, 1);
    EXPECT_FALSE(fs::exists(workdir() / "gen/bad.png"));
}
