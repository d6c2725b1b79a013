#include "exas/http_server.hpp"

#include <httplib.h>

#include <cstdio>

#include "exas/errors.hpp"

namespace exas {

using nlohmann::json;

namespace {

constexpr double default_gate_timeout_s = 60.0;

void reply(httplib::Response& res, const ApiResult& r) {
    res.status = r.status;
    if (r.text) {
        res.set_content(*r.text, r.content_type);
    } else {
        res.set_content(r.body.dump(), "application/json");
    }
}

std::optional<double> timeout_param(const httplib::Request& req) {
    if (!req.has_param("timeout_s")) return default_gate_timeout_s;
    try {
        std::size_t used = 0;
        const auto& raw = req.get_param_value("timeout_s");
        const double v = std::stod(raw, &used);
        if (used != raw.size()) return std::nullopt;
        return v;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

std::string sse_frame(const std::string& event, const json& data) {
    return "event: " + event + "\ndata: " + data.dump() + "\n\n";
}

}  // namespace

HttpServer::HttpServer(Orchestrator& api) : api_(api), server_(std::make_unique<httplib::Server>()) {
    auto& s = *server_;
    // Event streams and gate waits hold a worker each.
    s.new_task_queue = [] { return new httplib::ThreadPool(64); };

    s.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        std::string what = "internal error";
        try {
            std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            what = e.what();
        } catch (...) {
        }
        res.status = 500;
        res.set_content(json{{"error", what}}.dump(), "application/json");
    });

    s.Post("/experiments", [this](const httplib::Request& req, httplib::Response& res) {
        reply(res, api_.handle_submit(req.body));
    });
    s.Post(R"(/experiments/clarify/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        reply(res, api_.handle_clarify(req.matches[1], req.body));
    });
    s.Get("/experiments", [this](const httplib::Request& req, httplib::Response& res) {
        std::map<std::string, std::string> params;
        for (const auto& [k, v] : req.params) params[k] = v;
        reply(res, api_.handle_query(params));
    });
    s.Get(R"(/experiments/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        reply(res, api_.handle_status(req.matches[1]));
    });
    s.Get(R"(/experiments/([^/]+)/metrics)", [this](const httplib::Request& req, httplib::Response& res) {
        const bool csv = req.has_param("format") && req.get_param_value("format") == "csv";
        reply(res, api_.handle_results(req.matches[1], csv));
    });
    s.Get(R"(/experiments/([^/]+)/gate)", [this](const httplib::Request& req, httplib::Response& res) {
        const auto t = timeout_param(req);
        if (!t) return reply(res, {400, json{{"error", "timeout_s must be a number"}}, std::nullopt});
        reply(res, api_.handle_gate_wait(req.matches[1], *t));
    });
    s.Post(R"(/experiments/([^/]+)/attenuation)", [this](const httplib::Request& req, httplib::Response& res) {
        reply(res, api_.handle_attenuation(req.matches[1], req.body));
    });
    s.Delete(R"(/experiments/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        reply(res, api_.handle_cancel(req.matches[1]));
    });
    s.Get(R"(/experiments/([^/]+)/events)", [this](const httplib::Request& req, httplib::Response& res) {
        const std::string id = req.matches[1];
        Scheduler& sched = api_.scheduler();
        res.set_header("Cache-Control", "no-cache");
        if (!sched.find(id)) {
            res.set_content(sse_frame("error", json{{"experiment_id", id}, {"error", "unknown experiment " + id}}),
                            "text/event-stream");
            return;
        }
        auto cursor = std::make_shared<std::size_t>(0);
        res.set_chunked_content_provider("text/event-stream", [&sched, id, cursor](std::size_t, httplib::DataSink& sink) {
            const auto batch = sched.events_since(id, *cursor, std::chrono::milliseconds(500));
            for (const auto& e : batch.events) {
                const auto frame = sse_frame(e.kind, to_json(e));
                if (!sink.write(frame.data(), frame.size())) return false;
            }
            *cursor += batch.events.size();
            if (batch.closed) {
                sink.done();
            } else if (!sink.is_writable()) {
                return false;
            }
            return true;
        });
    });

    s.Get(R"(/requests/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        reply(res, api_.handle_request_status(req.matches[1]));
    });
    s.Get(R"(/requests/([^/]+)/gate)", [this](const httplib::Request& req, httplib::Response& res) {
        const auto t = timeout_param(req);
        if (!t) return reply(res, {400, json{{"error", "timeout_s must be a number"}}, std::nullopt});
        reply(res, api_.handle_request_gate(req.matches[1], *t));
    });
    s.Delete(R"(/requests/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        reply(res, api_.handle_request_cancel(req.matches[1]));
    });
}

HttpServer::~HttpServer() {
    stop();
}

int HttpServer::bind(const std::string& host, int port) {
    int bound = port;
    if (port == 0) {
        bound = server_->bind_to_any_port(host);
    } else if (!server_->bind_to_port(host, port)) {
        bound = -1;
    }
    if (bound < 0) throw StorageError("cannot bind " + host + ":" + std::to_string(port));
    return bound;
}

void HttpServer::serve() {
    server_->listen_after_bind();
}

int HttpServer::start(const std::string& host, int port) {
    const int bound = bind(host, port);
    thread_ = std::thread([this] { serve(); });
    server_->wait_until_ready();
    return bound;
}

void HttpServer::stop() {
    if (server_) server_->stop();
    if (thread_.joinable()) thread_.join();
}

}  // namespace exas
