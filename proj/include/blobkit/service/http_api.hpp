#pragma once

#include "blobkit/service/config.hpp"
#include "blobkit/service/store.hpp"

#include <atomic>
#include <map>
#include <memory>
#include <string>

namespace httplib {
class Server;
}

namespace blobkit::service {

struct ApiRequest {
    std::string method;
    std::string path;
    std::map<std::string, std::string> query;
    std::string body;
};

struct ApiResponse {
    int status = 200;
    std::string content_type = "application/json";
    std::string body;
};

/// Transport-independent request handling for the layout service.
///
///   POST /layouts               create from a layout (or {"layout": ...})
///   GET  /layouts               list ids and revisions
///   GET  /layouts/{id}          fetch a record
///   PUT  /layouts/{id}          {"revision", "layout"}; full replace
///   POST /layouts/{id}/edit     {"op", ..., "revision"?}; one edit step
///   POST /fit                   PGM body; FitConfig overrides as query
///   POST /rasterize             layout -> run-length masks
///   POST /diagnostics           layout -> pairwise IOU, canvas flags, coverage
///   POST /attention-mask        {"blob", "h", "w", "canvas"?} -> bit grid
///   POST /eval                  {"cases", "layouts"} -> metrics report
///   GET  /export/{id}?format=   css | json | desc
///   POST /import                {"format", "text", "canvas"?, "caption"?}
///
/// Errors: 400 malformed input, 404 unknown id, 409 stale revision, 422
/// invariant violation (body carries "path").
class Api {
public:
    Api(AppConfig config, LayoutStore& store);

    ApiResponse handle(const ApiRequest& request) const;

    const AppConfig& config() const noexcept { return config_; }

private:
    ApiResponse route(const ApiRequest& request) const;

    AppConfig config_;
    LayoutStore& store_;
};

/// Run-length encoding of a mask in row-major order: alternating run
/// lengths, starting with a (possibly zero-length) background run.
std::vector<std::size_t> run_length_encode(const BinaryMask& mask);
BinaryMask run_length_decode(int width, int height, const std::vector<std::size_t>& runs);

/// cpp-httplib front end over Api.
class HttpServer {
public:
    explicit HttpServer(const Api& api);
    ~HttpServer();

    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Binds host:port (port 0 picks a free port) and returns the bound port.
    int bind(const std::string& host, int port);
    /// Blocks serving requests until stop().
    void serve();
    void stop();

private:
    const Api& api_;
    std::unique_ptr<httplib::Server> server_;
};

}  // namespace blobkit::service
