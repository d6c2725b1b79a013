#include "exas/cli.hpp"

#include <CLI11.hpp>
#include <httplib.h>
#include <signal.h>

#include <iostream>
#include <memory>

#include "exas/config.hpp"
#include "exas/errors.hpp"
#include "exas/http_server.hpp"
#include "exas/orchestrator.hpp"

namespace exas::cli {

using nlohmann::json;

namespace {

struct Reply {
    int status = 0;
    std::string body;
    std::string error;
};

class Client {
  public:
    explicit Client(const std::string& url) : client_(url) {
        client_.set_connection_timeout(5);
        client_.set_read_timeout(120);
    }

    void read_timeout(double seconds) { client_.set_read_timeout(static_cast<time_t>(seconds) + 30); }

    Reply get(const std::string& path) { return wrap(client_.Get(path)); }
    Reply post(const std::string& path, const json& body) {
        return wrap(client_.Post(path, body.dump(), "application/json"));
    }
    Reply del(const std::string& path) { return wrap(client_.Delete(path)); }

    // Streams server-sent events to out until the server closes the stream.
    bool stream(const std::string& path, std::ostream& out, std::string& error) {
        auto res = client_.Get(path, [&](const char* data, std::size_t n) {
            out.write(data, static_cast<std::streamsize>(n));
            out.flush();
            return true;
        });
        if (!res) error = httplib::to_string(res.error());
        return static_cast<bool>(res);
    }

  private:
    static Reply wrap(const httplib::Result& res) {
        if (!res) return {0, {}, httplib::to_string(res.error())};
        return {res->status, res->body, {}};
    }
    httplib::Client client_;
};

std::string encode(const std::string& s) {
    return httplib::detail::encode_url(s);
}

// Pretty-prints JSON bodies, passes other text through.
int print(const Reply& r, std::ostream& out, std::ostream& err) {
    if (r.status == 0) {
        err << "exasctl: request failed: " << r.error << "\n";
        return exit_error;
    }
    json j = json::parse(r.body, nullptr, false);
    if (j.is_discarded()) {
        out << r.body;
    } else {
        out << j.dump(2) << "\n";
    }
    return r.status >= 200 && r.status < 300 ? 0 : exit_error;
}

std::string experiment_path(const std::string& id) {
    return (id.starts_with("req-") ? "/requests/" : "/experiments/") + encode(id);
}

int serve(const std::string& config_path, const std::string& host_override, int port_override, std::ostream& out,
          std::ostream& err) {
    ServiceConfig config;
    try {
        config = load_config(config_path);
    } catch (const Error& e) {
        err << "exasctl: " << e.what() << "\n";
        return exit_error;
    }
    if (!host_override.empty()) config.listen_host = host_override;
    if (port_override >= 0) config.listen_port = port_override;

    // Worker threads inherit the mask; only sigwait below sees the signals.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    try {
        Repository repo(config.repository_path);
        ResourcePool pool(config.pool_id, config.pool_capacity);
        DriverSet drivers(config.drivers);
        Scheduler scheduler(pool, drivers, repo, {config.max_concurrent_experiments, utc_now});
        ClarificationStore tokens(config.clarification_ttl);
        Orchestrator api(config, scheduler, repo, tokens);
        HttpServer server(api);
        const int port = server.start(config.listen_host, config.listen_port);
        out << "exas listening on http://" << config.listen_host << ":" << port << " (repository "
            << config.repository_path << ", time scale " << config.time_scale << "x)" << std::endl;
        int sig = 0;
        sigwait(&signals, &sig);
        out << "exas shutting down" << std::endl;
        server.stop();
        scheduler.shutdown();
    } catch (const Error& e) {
        err << "exasctl: " << e.what() << "\n";
        return exit_error;
    }
    return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Experimentation-as-a-Service control tool", "exasctl"};
    app.require_subcommand(1);
    std::string url = "http://127.0.0.1:8686";
    app.add_option("--url", url, "Service base URL");

    std::string config_path, host;
    int port = -1;
    auto* serve_cmd = app.add_subcommand("serve", "Run the orchestrator service");
    serve_cmd->add_option("-c,--config", config_path, "Configuration file (EXAS_CONFIG overrides)");
    serve_cmd->add_option("--host", host, "Listen address");
    serve_cmd->add_option("--port", port, "Listen port (0 picks one)");

    std::string text;
    auto* submit_cmd = app.add_subcommand("submit", "Submit a natural-language experiment request");
    submit_cmd->add_option("request", text, "Request text")->required();

    std::string token, answer;
    auto* clarify_cmd = app.add_subcommand("clarify", "Answer clarification questions");
    clarify_cmd->add_option("token", token)->required();
    clarify_cmd->add_option("answer", answer)->required();

    std::string id;
    auto* status_cmd = app.add_subcommand("status", "Show experiment or request status");
    status_cmd->add_option("id", id)->required();

    bool csv = false;
    auto* results_cmd = app.add_subcommand("results", "Fetch archived metrics");
    results_cmd->add_option("id", id)->required();
    results_cmd->add_flag("--csv", csv, "t_offset_s,core,traffic,mbps rows");

    double timeout_s = 600.0;
    auto* gate_cmd = app.add_subcommand("gate", "Wait for the KPI verdict; exit 0 pass, 1 fail, 2 timeout");
    gate_cmd->add_option("id", id)->required();
    gate_cmd->add_option("-t,--timeout", timeout_s, "Seconds to wait")->check(CLI::Range(0.0, 86400.0));

    auto* cancel_cmd = app.add_subcommand("cancel", "Cancel an experiment or request");
    cancel_cmd->add_option("id", id)->required();

    std::string core, modality, state, from, to, descriptor;
    auto* query_cmd = app.add_subcommand("query", "Search archived experiments");
    query_cmd->add_option("--core", core);
    query_cmd->add_option("--modality", modality);
    query_cmd->add_option("--state", state);
    query_cmd->add_option("--from", from, "RFC 3339, inclusive");
    query_cmd->add_option("--to", to, "RFC 3339, inclusive");
    query_cmd->add_option("--descriptor", descriptor);

    double value_db = 0.0;
    auto* atten_cmd = app.add_subcommand("attenuate", "Set OTA attenuation of a running sim-ota experiment");
    atten_cmd->add_option("id", id)->required();
    atten_cmd->add_option("value_db", value_db)->required();

    auto* events_cmd = app.add_subcommand("events", "Follow an experiment's event stream");
    events_cmd->add_option("id", id)->required();

    std::vector<std::string> argv_store{"exasctl"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& a : argv_store) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e, out, err);
        return rc == 0 ? 0 : exit_error;
    }

    if (*serve_cmd) return serve(config_path, host, port, out, err);

    Client client(url);
    if (*submit_cmd) return print(client.post("/experiments", json{{"user_request", text}}), out, err);
    if (*clarify_cmd) {
        return print(client.post("/experiments/clarify/" + encode(token), json{{"answer", answer}}), out, err);
    }
    if (*status_cmd) return print(client.get(experiment_path(id)), out, err);
    if (*results_cmd) {
        return print(client.get(experiment_path(id) + "/metrics" + (csv ? "?format=csv" : "")), out, err);
    }
    if (*cancel_cmd) return print(client.del(experiment_path(id)), out, err);
    if (*atten_cmd) {
        return print(client.post(experiment_path(id) + "/attenuation", json{{"value_db", value_db}}), out, err);
    }
    if (*events_cmd) {
        std::string error;
        if (!client.stream(experiment_path(id) + "/events", out, error)) {
            err << "exasctl: stream failed: " << error << "\n";
            return exit_error;
        }
        return 0;
    }
    if (*query_cmd) {
        httplib::Params params;
        if (!core.empty()) params.emplace("core_name", core);
        if (!modality.empty()) params.emplace("modality", modality);
        if (!state.empty()) params.emplace("state", state);
        if (!from.empty()) params.emplace("from", from);
        if (!to.empty()) params.emplace("to", to);
        if (!descriptor.empty()) params.emplace("descriptor_ref", descriptor);
        return print(client.get(httplib::append_query_params("/experiments", params)), out, err);
    }
    if (*gate_cmd) {
        client.read_timeout(timeout_s);
        char buf[64];
        std::snprintf(buf, sizeof buf, "%g", timeout_s);
        const auto r = client.get(experiment_path(id) + "/gate?timeout_s=" + buf);
        if (print(r, out, err) != 0) return exit_error;
        const json j = json::parse(r.body, nullptr, false);
        const auto result = j.is_object() ? j.value("result", "") : "";
        if (result == "pass") return exit_pass;
        if (result == "fail") return exit_fail;
        if (result == "timeout") return exit_timeout;
        err << "exasctl: unexpected gate response\n";
        return exit_error;
    }
    return exit_error;
}

}  // namespace exas::cli
