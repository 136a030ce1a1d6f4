#pragma once
// JSON over HTTP for the service, mounted under /api/v1.

#include "ledgerscope/service.hpp"

#include <memory>
#include <string>

namespace ledgerscope {

class HttpServer {
public:
    explicit HttpServer(Service& service);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    // Binds to host:port; port 0 picks a free one. Returns the bound port.
    int bind(const std::string& host, int port);
    // Blocks until stop() is called.
    void run();
    void stop();
    // Serve files from dir at "/" (the browser client).
    bool mount_static(const std::string& dir);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace ledgerscope
