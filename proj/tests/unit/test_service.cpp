#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <future>
#include <random>
#include <thread>

#include <unistd.h>

#include <httplib.h>
#include <json.hpp>

#include "alcgan/data/png_io.hpp"
#include "alcgan/data/toy.hpp"
#include "alcgan/eval/base64.hpp"
#include "alcgan/eval/grid.hpp"
#include "alcgan/service/service.hpp"
#include "alcgan/train/checkpoint.hpp"

using namespace alcgan;
using namespace alcgan::service;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Fixture {
    fs::path ckpt;
    std::string sha;
    int resolution = 16;
};

const Fixture& fixture() {
    static const Fixture f = [] {
        Fixture f;
        const auto dir = fs::temp_directory_path() / ("alcgan_service_" + std::to_string(::getpid()));
        fs::remove_all(dir);
        fs::create_directories(dir);
        const auto base = model::scaled_model_config(16, 1.0 / 16.0);
        train::TrainingConfig t;
        t.seed = 5;
        train::Checkpoint c(base, t);
        f.ckpt = dir / "model.ckpt";
        train::save_checkpoint(c, f.ckpt);
        f.sha = train::file_sha256(f.ckpt);
        return f;
    }();
    return f;
}

const InferenceService& loaded_service() {
    static const InferenceService* s = [] {
        auto* p = new InferenceService;
        p->load(fixture().ckpt);
        return p;
    }();
    return *s;
}

data::IndexMap toy_map(std::uint64_t seed) {
    auto spec = data::ToySceneSpec::defaults();
    spec.resolution = 16;
    std::mt19937_64 rng(seed);
    return data::decode_layout(data::random_toy_layout(spec, rng));
}

std::string layout_b64(const data::IndexMap& map) {
    return eval::base64_encode(data::encode_png_indexed(map));
}

json generate_body(std::uint64_t seed = 11) {
    std::vector<double> attrs(40, 0.0);
    attrs[2] = 0.75;
    return {{"layout", layout_b64(toy_map(seed))}, {"attributes", attrs}, {"seed", seed}};
}

json error_of(const HttpResponse& r) { return json::parse(r.body).at("error"); }

} // namespace

// The handlers are tested directly; one test covers the HTTP transport.

TEST(Service, AnswersUnavailableUntilLoaded) {
    InferenceService s;
    EXPECT_FALSE(s.loaded());
    for (const auto& r : {s.meta(), s.generate(generate_body().dump()), s.sweep("{}")}) {
        EXPECT_EQ(r.status, 503);
        EXPECT_EQ(error_of(r).at("status"), 503);
    }
    s.load(fixture().ckpt);
    EXPECT_TRUE(s.loaded());
    EXPECT_EQ(s.meta().status, 200);
    EXPECT_THROW(s.load(fixture().ckpt), ValidationError);
}

TEST(Service, MetaListsVocabularies) {
    const auto r = loaded_service().meta();
    ASSERT_EQ(r.status, 200);
    const auto doc = json::parse(r.body);
    EXPECT_EQ(doc.at("labels").size(), 19u);
    EXPECT_EQ(doc.at("attributes").size(), 40u);
    EXPECT_EQ(doc.at("labels")[0], "sky");
    EXPECT_EQ(doc.at("labels")[18], "unlabeled");
    EXPECT_EQ(doc.at("resolution"), 16);
    EXPECT_EQ(doc.at("checkpoint"), fixture().sha);
    EXPECT_EQ(doc.at("variant"), "AL");
}

TEST(Service, GenerateMatchesDirectInference) {
    const auto body = generate_body(11);
    const auto r = loaded_service().generate(body.dump());
    ASSERT_EQ(r.status, 200) << r.body;
    const auto doc = json::parse(r.body);
    EXPECT_EQ(doc.at("provenance").at("checkpoint"), fixture().sha);
    EXPECT_EQ(doc.at("provenance").at("seed"), 11);
    EXPECT_GE(doc.at("provenance").at("latency_ms").get<double>(), 0.0);

    const auto png = eval::base64_decode(doc.at("image").get<std::string>());
    const auto got = data::decode_png_rgb(png);
    ASSERT_EQ(got.height, 16);
    ASSERT_EQ(got.width, 16);

    const auto state = train::load_checkpoint(fixture().ckpt);
    eval::Probe probe{data::encode_layout(toy_map(11)), data::AttributeVector::from_json(body["attributes"]), 11};
    const auto expected = data::quantize_image(eval::generate_image(state.generator, probe));
    EXPECT_EQ(got.data, expected.data);
}

TEST(Service, IdenticalRequestsGiveIdenticalImages) {
    const auto body = generate_body(4).dump();
    const auto a = json::parse(loaded_service().generate(body).body);
    const auto b = json::parse(loaded_service().generate(body).body);
    EXPECT_EQ(a.at("image"), b.at("image"));
    auto other = generate_body(4);
    other["seed"] = 5;
    const auto c = json::parse(loaded_service().generate(other.dump()).body);
    EXPECT_NE(a.at("image"), c.at("image"));
}

TEST(Service, ConcurrentRequestsAgree) {
    const auto body = generate_body(8).dump();
    const auto reference = loaded_service().generate(body).body;
    const auto image = json::parse(reference).at("image");
    std::vector<std::future<std::string>> futures;
    for (int i = 0; i < 4; ++i) {
        futures.push_back(std::async(std::launch::async, [&] { return loaded_service().generate(body).body; }));
    }
    for (auto& f : futures) EXPECT_EQ(json::parse(f.get()).at("image"), image);
}

TEST(Service, MalformedRequestsAre400) {
    const auto& s = loaded_service();
    EXPECT_EQ(s.generate("{not json").status, 400);
    EXPECT_EQ(error_of(s.generate("[1,2]")).at("field"), "body");

    auto b = generate_body();
    b["layout"] = "!!!";
    EXPECT_EQ(error_of(s.generate(b.dump())).at("field"), "layout");
    b["layout"] = eval::base64_encode(data::Bytes{1, 2, 3, 4});
    EXPECT_EQ(s.generate(b.dump()).status, 400);

    b = generate_body();
    b.erase("layout");
    EXPECT_EQ(error_of(s.generate(b.dump())).at("field"), "layout");

    b = generate_body();
    b["attributes"] = "night";
    EXPECT_EQ(error_of(s.generate(b.dump())).at("field"), "attributes");
    b["attributes"] = json::array();
    for (int k = 0; k < 40; ++k) b["attributes"].push_back(0.0);
    b["attributes"][7] = "x";
    const auto r = s.generate(b.dump());
    EXPECT_EQ(r.status, 400);
    EXPECT_EQ(error_of(r).at("field"), "attributes[7]");

    b = generate_body();
    b["seed"] = -1;
    EXPECT_EQ(error_of(s.generate(b.dump())).at("field"), "seed");
    b["seed"] = 1.5;
    EXPECT_EQ(s.generate(b.dump()).status, 400);
}

TEST(Service, ShapeAndRangeViolationsAre422) {
    const auto& s = loaded_service();
    auto b = generate_body();
    b["attributes"][12] = 1.5;
    auto r = s.generate(b.dump());
    EXPECT_EQ(r.status, 422);
    EXPECT_EQ(error_of(r).at("field"), "attributes[12]");

    b = generate_body();
    b["attributes"].erase(0);
    r = s.generate(b.dump());
    EXPECT_EQ(r.status, 422);
    EXPECT_EQ(error_of(r).at("field"), "attributes");

    b = generate_body();
    b["layout"] = layout_b64(data::IndexMap(8, 8, 0));
    r = s.generate(b.dump());
    EXPECT_EQ(r.status, 422);
    EXPECT_EQ(error_of(r).at("field"), "layout");

    auto map = toy_map(1);
    map.labels[3 * 16 + 5] = 40;
    b["layout"] = layout_b64(map);
    r = s.generate(b.dump());
    EXPECT_EQ(r.status, 422);
    EXPECT_EQ(error_of(r).at("field"), "layout[3,5]");

    b = generate_body();
    b["checkpoint"] = std::string(64, '0');
    r = s.generate(b.dump());
    EXPECT_EQ(r.status, 422);
    EXPECT_EQ(error_of(r).at("field"), "checkpoint");
    b["checkpoint"] = fixture().sha.substr(0, 12);
    EXPECT_EQ(s.generate(b.dump()).status, 200);
}

TEST(Service, SweepReturnsOneImagePerStrength) {
    const auto& s = loaded_service();
    auto b = generate_body(2);
    b["attribute"] = "night";
    b["strengths"] = {0.0, 0.5, 1.0};
    auto r = s.sweep(b.dump());
    ASSERT_EQ(r.status, 200) << r.body;
    auto doc = json::parse(r.body);
    ASSERT_EQ(doc.at("images").size(), 3u);
    EXPECT_EQ(doc.at("attribute"), 2);

    // Strength 0.75 on "night" is the base request, so the sweep reproduces /generate.
    b["strengths"] = {0.75};
    doc = json::parse(s.sweep(b.dump()).body);
    const auto single = json::parse(s.generate(generate_body(2).dump()).body);
    EXPECT_EQ(doc.at("images")[0], single.at("image"));

    b["attribute"] = "no-such-attribute";
    EXPECT_EQ(s.sweep(b.dump()).status, 422);
    b["attribute"] = 40;
    EXPECT_EQ(s.sweep(b.dump()).status, 422);
    b["attribute"] = 2;
    b["strengths"] = {0.5, 0.2};
    r = s.sweep(b.dump());
    EXPECT_EQ(r.status, 422);
    EXPECT_EQ(error_of(r).at("field"), "strengths[1]");
    b["strengths"] = json::array();
    EXPECT_EQ(s.sweep(b.dump()).status, 422);
    b["strengths"] = std::vector<double>(33, 0.5);
    EXPECT_EQ(s.sweep(b.dump()).status, 422);
    b.erase("strengths");
    EXPECT_EQ(s.sweep(b.dump()).status, 400);
}

TEST(Service, PortFromEnvironment) {
    ::unsetenv("ALCGAN_PORT");
    EXPECT_EQ(port_from_environment(9000), 9000);
    ::setenv("ALCGAN_PORT", "8123", 1);
    EXPECT_EQ(port_from_environment(), 8123);
    ::setenv("ALCGAN_PORT", "80x", 1);
    EXPECT_THROW(port_from_environment(), ValidationError);
    ::unsetenv("ALCGAN_PORT");
}

TEST(Service, HttpLoopback) {
    Server server(loaded_service(), {"127.0.0.1", 0, 2});
    const int port = server.bind();
    ASSERT_GT(port, 0);
    std::thread t([&] { server.listen(); });

    httplib::Client client("127.0.0.1", port);
    client.set_read_timeout(30, 0);
    httplib::Result meta;
    for (int i = 0; i < 100 && !(meta = client.Get("/meta")); ++i) {
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    ASSERT_TRUE(meta);
    EXPECT_EQ(meta->status, 200);
    EXPECT_EQ(meta->get_header_value("Access-Control-Allow-Origin"), "*");
    EXPECT_EQ(json::parse(meta->body).at("labels").size(), 19u);

    const auto body = generate_body(3).dump();
    auto gen = client.Post("/generate", body, "application/json");
    ASSERT_TRUE(gen);
    EXPECT_EQ(gen->status, 200);
    EXPECT_EQ(json::parse(gen->body).at("image"), json::parse(loaded_service().generate(body).body).at("image"));

    auto bad = client.Post("/generate", "{", "application/json");
    ASSERT_TRUE(bad);
    EXPECT_EQ(bad->status, 400);

    auto pre = client.Options("/generate");
    ASSERT_TRUE(pre);
    EXPECT_EQ(pre->status, 204);

    server.stop();
    t.join();
}
