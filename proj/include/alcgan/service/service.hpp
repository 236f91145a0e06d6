#pragma once

#include <atomic>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>

#include <json.hpp>

#include "alcgan/model/networks.hpp"

namespace alcgan::service {

struct HttpResponse {
    int status = 200;
    std::string body;
    std::string content_type = "application/json";
};

/// Request handlers for one checkpoint. Handlers are pure functions of the
/// request body and the loaded weights, and are safe to call concurrently.
/// Until a checkpoint is loaded every handler answers 503.
class InferenceService {
public:
    InferenceService() = default;

    /// Loads a checkpoint once; later calls throw.
    void load(const std::filesystem::path& checkpoint);
    bool loaded() const noexcept { return model_.load(std::memory_order_acquire) != nullptr; }

    HttpResponse meta() const;
    HttpResponse generate(std::string_view body) const;
    HttpResponse sweep(std::string_view body) const;

private:
    struct Model;
    std::shared_ptr<const Model> holder_;
    std::atomic<const Model*> model_{nullptr};
};

/// JSON error body {"error": {"status", "field", "message"}}.
HttpResponse error_response(int status, const std::string& field, const std::string& message);

struct ServerOptions {
    std::string host = "127.0.0.1";
    int port = 8080;      // 0 binds any free port
    int workers = 2;      // simultaneous requests; the rest queue FIFO
};

/// Port from ALCGAN_PORT, else `fallback`.
int port_from_environment(int fallback = 8080);

/// HTTP front end: POST /generate, POST /sweep, GET /meta (CORS open, so a
/// browser studio served from elsewhere can call it).
class Server {
public:
    Server(const InferenceService& service, ServerOptions options);
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    /// Binds and returns the bound port. Throws IoError if binding fails.
    int bind();
    /// Serves until stop(); call after bind().
    void listen();
    /// Blocks until listen() is accepting connections.
    void wait_until_ready() const;
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace alcgan::service
