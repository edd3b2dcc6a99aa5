#pragma once

#include <memory>
#include <string>

#include "revassist/llm_pipeline.hpp"
#include "revassist/review_service.hpp"

namespace httplib {
class Server;
}

namespace revassist {

/// HTTP front end for a ReviewService. Routes and bodies are documented in
/// docs/rest_api.md.
class RestServer {
public:
    RestServer(ReviewService& service, Approach default_approach);
    ~RestServer();

    /// Binds and serves until stop(); returns false when binding fails.
    bool listen(const std::string& host, int port);

    /// Binds to a free port and returns it, or -1. Serve with listen_after_bind().
    int bind_to_any_port(const std::string& host);
    bool listen_after_bind();
    void wait_until_ready() const;
    void stop();

private:
    void install_routes();

    ReviewService& service_;
    Approach default_approach_;
    std::unique_ptr<httplib::Server> server_;
};

}  // namespace revassist
