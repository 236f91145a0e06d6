#include "alcgan/service/service.hpp"

#include <chrono>
#include <cstdlib>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "alcgan/data/png_io.hpp"
#include "alcgan/data/taxonomy.hpp"
#include "alcgan/error.hpp"
#include "alcgan/eval/base64.hpp"
#include "alcgan/eval/drivers.hpp"
#include "alcgan/eval/grid.hpp"
#include "alcgan/train/checkpoint.hpp"

namespace alcgan::service {

namespace {

constexpr std::size_t kMaxSweepSteps = 32;

/// A request problem that maps onto an HTTP status.
struct RequestError {
    int status;
    std::string field;
    std::string message;
};

nlohmann::json parse_body(std::string_view body) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
        throw RequestError{400, "body", std::string("malformed JSON: ") + e.what()};
    }
    if (!doc.is_object()) throw RequestError{400, "body", "request must be a JSON object"};
    return doc;
}

std::string png_base64(const data::Image& image) {
    return eval::base64_encode(data::encode_png_rgb(data::quantize_image(image)));
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

HttpResponse json_response(const nlohmann::json& doc) { return {200, doc.dump(), "application/json"}; }

} // namespace

struct InferenceService::Model {
    model::ModelConfig config;
    model::Generator<float> generator;
    std::string sha256;
    std::string path;
};

HttpResponse error_response(int status, const std::string& field, const std::string& message) {
    nlohmann::json doc{{"error", {{"status", status}, {"field", field}, {"message", message}}}};
    return {status, doc.dump(), "application/json"};
}

void InferenceService::load(const std::filesystem::path& checkpoint) {
    if (holder_) throw ValidationError("checkpoint", "a checkpoint is already loaded");
    auto state = train::load_checkpoint(checkpoint);
    eval::require_finite_weights(state.generator);
    auto m = std::make_shared<const Model>(
        Model{state.model, std::move(state.generator), train::file_sha256(checkpoint), checkpoint.string()});
    holder_ = m;
    model_.store(m.get(), std::memory_order_release);
    spdlog::info("service: loaded {} ({}), {}x{}, variant {}", m->path, m->sha256.substr(0, 12),
                 m->config.generator.resolution, m->config.generator.resolution, model::to_string(m->config.variant));
}

namespace {

template <typename Model>
eval::Probe parse_probe(const nlohmann::json& doc, const Model& m) {
    const auto& gc = m.config.generator;
    eval::Probe probe;

    if (doc.contains("checkpoint") && !doc["checkpoint"].is_null()) {
        if (!doc["checkpoint"].is_string()) throw RequestError{400, "checkpoint", "must be a string"};
        const auto id = doc["checkpoint"].get<std::string>();
        if (id.size() < 8 || m.sha256.compare(0, id.size(), id) != 0) {
            throw RequestError{422, "checkpoint", "service holds checkpoint " + m.sha256};
        }
    }

    if (doc.contains("layout") && !doc["layout"].is_null()) {
        if (!doc["layout"].is_string()) throw RequestError{400, "layout", "must be a base64 PNG string"};
        data::IndexMap map;
        try {
            map = data::decode_png_indexed(eval::base64_decode(doc["layout"].get<std::string>(), "layout"));
        } catch (const Error& e) {
            throw RequestError{400, "layout", e.what()};
        }
        if (map.height != gc.resolution || map.width != gc.resolution) {
            throw RequestError{422, "layout", "expected " + std::to_string(gc.resolution) + "x" +
                                                  std::to_string(gc.resolution) + ", got " +
                                                  std::to_string(map.height) + "x" + std::to_string(map.width)};
        }
        try {
            probe.layout = data::encode_layout(map);
        } catch (const ValidationError& e) {
            throw RequestError{422, e.field(), e.what()};
        }
    } else if (gc.layout_channels > 0) {
        throw RequestError{400, "layout", "missing"};
    } else {
        probe.layout = data::encode_layout(data::IndexMap(gc.resolution, gc.resolution, data::kUnlabeled));
    }

    if (doc.contains("attributes")) {
        const auto& a = doc["attributes"];
        if (!a.is_array()) throw RequestError{400, "attributes", "must be an array of numbers"};
        for (std::size_t k = 0; k < a.size(); ++k) {
            if (!a[k].is_number()) throw RequestError{400, "attributes[" + std::to_string(k) + "]", "must be a number"};
        }
        try {
            probe.attributes = data::AttributeVector::from_json(a);
        } catch (const ValidationError& e) {
            throw RequestError{422, e.field(), e.what()};
        }
    } else if (gc.attribute_channels > 0) {
        throw RequestError{400, "attributes", "missing"};
    }

    if (doc.contains("seed")) {
        const auto& s = doc["seed"];
        if (!s.is_number_unsigned()) {
            throw RequestError{400, "seed", "must be a non-negative integer"};
        }
        probe.seed = s.get<std::uint64_t>();
    }
    return probe;
}

} // namespace

HttpResponse InferenceService::meta() const {
    const Model* m = model_.load(std::memory_order_acquire);
    if (!m) return error_response(503, "checkpoint", "no checkpoint loaded");
    const auto& gc = m->config.generator;
    return json_response({{"labels", data::LabelTaxonomy::standard().channel_names()},
                          {"attributes", data::AttributeNames::standard().names()},
                          {"resolution", gc.resolution},
                          {"noise_dim", gc.noise_dim},
                          {"variant", model::to_string(m->config.variant)},
                          {"checkpoint", m->sha256}});
}

HttpResponse InferenceService::generate(std::string_view body) const {
    const Model* m = model_.load(std::memory_order_acquire);
    if (!m) return error_response(503, "checkpoint", "no checkpoint loaded");
    const auto start = std::chrono::steady_clock::now();
    try {
        const auto probe = parse_probe(parse_body(body), *m);
        const auto image = eval::generate_image(m->generator, probe);
        return json_response({{"image", png_base64(image)},
                              {"width", image.width},
                              {"height", image.height},
                              {"provenance",
                               {{"checkpoint", m->sha256}, {"seed", probe.seed}, {"latency_ms", elapsed_ms(start)}}}});
    } catch (const RequestError& e) {
        return error_response(e.status, e.field, e.message);
    } catch (const ValidationError& e) {
        return error_response(422, e.field(), e.what());
    } catch (const std::exception& e) {
        return error_response(500, "", e.what());
    }
}

HttpResponse InferenceService::sweep(std::string_view body) const {
    const Model* m = model_.load(std::memory_order_acquire);
    if (!m) return error_response(503, "checkpoint", "no checkpoint loaded");
    const auto start = std::chrono::steady_clock::now();
    try {
        const auto doc = parse_body(body);
        const auto probe = parse_probe(doc, *m);

        eval::SweepRequest req{probe.layout, probe.attributes, 0, {}, probe.seed};
        if (!doc.contains("attribute")) throw RequestError{400, "attribute", "missing"};
        const auto& a = doc["attribute"];
        if (a.is_number_integer()) {
            req.attribute_index = a.get<int>();
        } else if (a.is_string()) {
            try {
                req.attribute_index = data::AttributeNames::standard().index_of(a.get<std::string>());
            } catch (const ValidationError& e) {
                throw RequestError{422, "attribute", e.what()};
            }
        } else {
            throw RequestError{400, "attribute", "must be an attribute name or index"};
        }
        if (req.attribute_index < 0 || req.attribute_index >= data::kAttributeCount) {
            throw RequestError{422, "attribute", "index must lie in [0,39]"};
        }

        if (!doc.contains("strengths") || !doc["strengths"].is_array()) {
            throw RequestError{400, "strengths", "must be an array of numbers"};
        }
        for (std::size_t i = 0; i < doc["strengths"].size(); ++i) {
            if (!doc["strengths"][i].is_number()) throw RequestError{400, "strengths[" + std::to_string(i) + "]", "must be a number"};
            req.strengths.push_back(doc["strengths"][i].get<double>());
        }
        if (req.strengths.size() > kMaxSweepSteps) {
            throw RequestError{422, "strengths", "at most " + std::to_string(kMaxSweepSteps) + " steps"};
        }
        req.validate();

        const auto report = eval::attribute_sweep(m->generator, req);
        nlohmann::json images = nlohmann::json::array();
        for (const auto& c : report.cells) images.push_back(png_base64(c.image));
        return json_response({{"images", images},
                              {"attribute", req.attribute_index},
                              {"strengths", req.strengths},
                              {"provenance",
                               {{"checkpoint", m->sha256}, {"seed", probe.seed}, {"latency_ms", elapsed_ms(start)}}}});
    } catch (const RequestError& e) {
        return error_response(e.status, e.field, e.message);
    } catch (const ValidationError& e) {
        return error_response(422, e.field(), e.what());
    } catch (const std::exception& e) {
        return error_response(500, "", e.what());
    }
}

int port_from_environment(int fallback) {
    const char* v = std::getenv("ALCGAN_PORT");
    if (v == nullptr || *v == '\0') return fallback;
    char* end = nullptr;
    const long port = std::strtol(v, &end, 10);
    if (*end != '\0' || port < 0 || port > 65535) throw ValidationError("ALCGAN_PORT", "not a port number: " + std::string(v));
    return static_cast<int>(port);
}

// ---------------------------------------------------------------------------

struct Server::Impl {
    Impl(const InferenceService& s, ServerOptions o) : service(s), options(std::move(o)) {}
    const InferenceService& service;
    ServerOptions options;
    httplib::Server http;
    int port = -1;
};

namespace {

void reply(httplib::Response& res, const HttpResponse& r) {
    res.status = r.status;
    res.set_content(r.body, r.content_type);
}

} // namespace

Server::Server(const InferenceService& service, ServerOptions options)
    : impl_(std::make_unique<Impl>(service, std::move(options))) {
    if (impl_->options.workers < 1) throw ValidationError("workers", "must be at least 1");
    auto& http = impl_->http;
    const auto workers = static_cast<std::size_t>(impl_->options.workers);
    http.new_task_queue = [workers] { return new httplib::ThreadPool(workers); };
    http.set_payload_max_length(16u << 20);
    http.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Headers", "Content-Type"},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});

    const InferenceService& svc = impl_->service;
    http.Get("/meta", [&svc](const httplib::Request&, httplib::Response& res) { reply(res, svc.meta()); });
    http.Post("/generate",
              [&svc](const httplib::Request& req, httplib::Response& res) { reply(res, svc.generate(req.body)); });
    http.Post("/sweep", [&svc](const httplib::Request& req, httplib::Response& res) { reply(res, svc.sweep(req.body)); });
    http.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    http.set_logger([](const httplib::Request& req, const httplib::Response& res) {
        spdlog::info("{} {} -> {}", req.method, req.path, res.status);
    });
}

Server::~Server() { stop(); }

int Server::bind() {
    auto& o = impl_->options;
    if (o.port == 0) {
        impl_->port = impl_->http.bind_to_any_port(o.host);
    } else {
        impl_->port = impl_->http.bind_to_port(o.host, o.port) ? o.port : -1;
    }
    if (impl_->port < 0) throw IoError("cannot bind " + o.host + ":" + std::to_string(o.port));
    return impl_->port;
}

void Server::listen() {
    if (impl_->port < 0) bind();
    spdlog::info("service: listening on http://{}:{} with {} worker(s)", impl_->options.host, impl_->port,
                 impl_->options.workers);
    impl_->http.listen_after_bind();
}

void Server::wait_until_ready() const { impl_->http.wait_until_ready(); }

void Server::stop() {
    if (impl_ && impl_->http.is_running()) impl_->http.stop();
}

} // namespace alcgan::service
