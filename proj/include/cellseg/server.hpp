#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace cellseg {

struct ServerConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::size_t max_upload_bytes = 64u << 20;
    int session_ttl_seconds = 3600;
};

/// Reads CELLSEG_PORT, CELLSEG_MAX_UPLOAD_BYTES and CELLSEG_SESSION_TTL_SECONDS over `base`.
ServerConfig config_from_env(ServerConfig base = {});

struct HttpResponse {
    int status = 200;
    std::string content_type = "application/json";
    std::string body;
    std::map<std::string, std::string> headers;
};

/// 64-bit FNV-1a, used for content-addressed cache keys.
std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t seed = 0xcbf29ce484222325ull);

/// Request handling independent of the HTTP transport. Thread-safe: requests for
/// different sessions run concurrently, requests within a session are serialized.
class Service {
public:
    using Clock = std::function<std::chrono::steady_clock::time_point()>;

    explicit Service(ServerConfig config = {}, Clock clock = {});
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    HttpResponse handle(const std::string& method, const std::string& path, const std::string& body);

    std::size_t session_count();
    const ServerConfig& config() const { return config_; }

private:
    struct Session;

    std::shared_ptr<Session> find_session(const std::string& id);
    void expire_sessions();

    HttpResponse create_session(const std::string& body);
    HttpResponse segment(Session& s, const std::string& body);
    HttpResponse classify(Session& s, const std::string& body);
    HttpResponse ground_truth(Session& s, const std::string& body);
    HttpResponse sweep(Session& s, const std::string& body);
    HttpResponse artifact(Session& s, const std::string& key);

    ServerConfig config_;
    Clock clock_;
    std::mutex store_mutex_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    std::uint64_t id_state_;
};

/// HTTP transport for a Service.
class HttpServer {
public:
    explicit HttpServer(Service& service);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Binds the listening socket; port 0 picks a free port. Returns the bound port.
    int bind(const std::string& host, int port);
    /// Serves until stop() is called.
    void listen();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace cellseg
