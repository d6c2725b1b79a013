#pragma once

#include <memory>
#include <string>
#include <thread>

#include "exas/orchestrator.hpp"

namespace httplib {
class Server;
}

namespace exas {

// REST front end over an Orchestrator:
//   POST   /experiments                      submit a natural-language request
//   POST   /experiments/clarify/{token}      answer clarification questions
//   GET    /experiments                      query the repository
//   GET    /experiments/{id}                 status
//   GET    /experiments/{id}/metrics         archived metrics (?format=csv)
//   GET    /experiments/{id}/events          server-sent event stream
//   POST   /experiments/{id}/attenuation     {"value_db": x}
//   DELETE /experiments/{id}                 cancel
//   GET    /experiments/{id}/gate            ?timeout_s=N
//   GET    /requests/{id}, /requests/{id}/gate, DELETE /requests/{id}
class HttpServer {
  public:
    explicit HttpServer(Orchestrator& api);
    ~HttpServer();

    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    // Port 0 picks a free port. Returns the bound port; throws StorageError
    // when binding fails.
    int bind(const std::string& host, int port);
    // Blocks until stop().
    void serve();
    // bind + serve on a background thread.
    int start(const std::string& host, int port);
    void stop();

  private:
    Orchestrator& api_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
};

}  // namespace exas
