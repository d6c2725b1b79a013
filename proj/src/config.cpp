#include "exas/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "exas/errors.hpp"

namespace exas {

using nlohmann::json;

namespace {

const std::set<std::string> top_level_keys{
    "listen",   "time_scale", "repository_path", "pool",     "scheduler",       "clarification_ttl_s",
    "policy",   "catalog",    "defaults",        "node_delay_ms", "fault_injection",
};

Modality modality_at(const json& j) {
    auto m = modality_from_string(j.get<std::string>());
    if (!m) throw ValidationError("unknown modality " + j.dump());
    return *m;
}

NodeRole role_at(const json& j) {
    auto r = node_role_from_string(j.get<std::string>());
    if (!r) throw ValidationError("unknown node role " + j.dump());
    return *r;
}

CoreProfile core_from_json(const json& j, const CoreProfile& base) {
    CoreProfile p = base;
    p.core_name = j.at("core_name").get<std::string>();
    p.version = j.value("version", p.version);
    p.tcp_mean_mbps = j.value("tcp_mean_mbps", p.tcp_mean_mbps);
    p.udp_mean_mbps = j.value("udp_mean_mbps", p.udp_mean_mbps);
    p.jitter_std_mbps = j.value("jitter_std_mbps", p.jitter_std_mbps);
    p.provision_delay_ms = j.value("provision_delay_ms", p.provision_delay_ms);
    p.latency_mean_ms = j.value("latency_mean_ms", p.latency_mean_ms);
    if (p.core_name.empty() || p.jitter_std_mbps < 0 || p.provision_delay_ms < 0) {
        throw ValidationError("invalid core profile " + j.dump());
    }
    return p;
}

json core_to_json(const CoreProfile& p) {
    return {{"core_name", p.core_name},           {"version", p.version},
            {"tcp_mean_mbps", p.tcp_mean_mbps},   {"udp_mean_mbps", p.udp_mean_mbps},
            {"jitter_std_mbps", p.jitter_std_mbps}, {"provision_delay_ms", p.provision_delay_ms},
            {"latency_mean_ms", p.latency_mean_ms}};
}

}  // namespace

ServiceConfig config_from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("configuration must be an object");
    for (const auto& [key, _] : j.items()) {
        if (!top_level_keys.contains(key)) throw ValidationError("unknown configuration key " + key);
    }
    ServiceConfig c;
    try {
        if (j.contains("listen")) {
            c.listen_host = j["listen"].value("host", c.listen_host);
            c.listen_port = j["listen"].value("port", c.listen_port);
        }
        c.time_scale = j.value("time_scale", c.time_scale);
        c.repository_path = j.value("repository_path", c.repository_path);
        if (j.contains("pool")) {
            c.pool_id = j["pool"].value("pool_id", c.pool_id);
            if (j["pool"].contains("capacity")) c.pool_capacity = j["pool"]["capacity"].get<ResourceVector>();
        }
        if (j.contains("scheduler")) {
            c.max_concurrent_experiments = j["scheduler"].value("max_concurrent_experiments", c.max_concurrent_experiments);
        }
        c.clarification_ttl = std::chrono::seconds(j.value("clarification_ttl_s", c.clarification_ttl.count()));

        if (j.contains("policy")) {
            const auto& p = j["policy"];
            c.policy.max_concurrent_experiments = p.value("max_concurrent_experiments", c.policy.max_concurrent_experiments);
            c.policy.max_runs_per_request = p.value("max_runs_per_request", c.policy.max_runs_per_request);
            if (p.contains("allowed_modalities")) {
                c.policy.allowed_modalities.clear();
                for (const auto& m : p["allowed_modalities"]) c.policy.allowed_modalities.insert(modality_at(m));
            }
            if (p.contains("per_run_resource_cap")) c.policy.per_run_resource_cap = p["per_run_resource_cap"].get<ResourceVector>();
        }

        if (j.contains("catalog")) {
            const auto& cat = j["catalog"];
            if (cat.contains("cores")) {
                c.catalog.cores.clear();
                for (const auto& core : cat["cores"]) {
                    auto p = core_from_json(core, CoreProfile{});
                    c.catalog.cores[p.core_name] = p;
                }
            }
            if (cat.contains("apps")) c.catalog.apps = cat["apps"].get<std::map<std::string, std::string>>();
            c.catalog.emulator_name = cat.value("emulator_name", c.catalog.emulator_name);
            c.catalog.emulator_version = cat.value("emulator_version", c.catalog.emulator_version);
            if (cat.contains("ota")) {
                const auto& o = cat["ota"];
                c.catalog.ota.bandwidth_mhz = o.value("bandwidth_mhz", c.catalog.ota.bandwidth_mhz);
                c.catalog.ota.snr0_db = o.value("snr0_db", c.catalog.ota.snr0_db);
                c.catalog.ota.attenuation_db = o.value("attenuation_db", c.catalog.ota.attenuation_db);
                c.catalog.ota.mimo_layers = o.value("mimo_layers", c.catalog.ota.mimo_layers);
                c.catalog.ota.jitter_std_mbps = o.value("jitter_std_mbps", c.catalog.ota.jitter_std_mbps);
            }
        }

        if (j.contains("defaults")) {
            const auto& d = j["defaults"];
            c.defaults.duration_s = d.value("duration_s", c.defaults.duration_s);
            c.defaults.interval_s = d.value("interval_s", c.defaults.interval_s);
            c.defaults.seed = d.value("seed", c.defaults.seed);
            if (d.contains("per_run_resources")) {
                for (const auto& [m, rv] : d["per_run_resources"].items()) {
                    c.defaults.per_run_resources[modality_at(json(m))] = rv.get<ResourceVector>();
                }
            }
        }

        if (j.contains("node_delay_ms")) {
            for (const auto& [role, ms] : j["node_delay_ms"].items()) {
                c.drivers.node_delay_ms[role_at(json(role))] = ms.get<std::int64_t>();
            }
        }
        if (j.contains("fault_injection")) {
            for (const auto& f : j["fault_injection"]) {
                c.drivers.faults.push_back({f.value("core", ""), role_at(f.at("role"))});
            }
        }
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed configuration: ") + e.what());
    }

    if (!(c.time_scale > 0.0)) throw ValidationError("time_scale must be positive");
    if (c.listen_port < 0 || c.listen_port > 65535) throw ValidationError("listen port out of range");
    if (c.max_concurrent_experiments < 1) throw ValidationError("max_concurrent_experiments must be >= 1");
    if (c.defaults.duration_s <= 0 || c.defaults.interval_s <= 0 || c.defaults.interval_s > c.defaults.duration_s) {
        throw ValidationError("defaults need 0 < interval_s <= duration_s");
    }
    c.drivers.time_scale = c.time_scale;
    return c;
}

json to_json(const ServiceConfig& c) {
    json cores = json::array();
    for (const auto& [_, p] : c.catalog.cores) cores.push_back(core_to_json(p));
    json modalities = json::array();
    for (auto m : c.policy.allowed_modalities) modalities.push_back(to_string(m));
    json per_run = json::object();
    for (const auto& [m, rv] : c.defaults.per_run_resources) per_run[std::string(to_string(m))] = rv;
    json delays = json::object();
    for (const auto& [role, ms] : c.drivers.node_delay_ms) delays[std::string(to_string(role))] = ms;
    json faults = json::array();
    for (const auto& f : c.drivers.faults) faults.push_back({{"core", f.core}, {"role", to_string(f.role)}});
    return {{"listen", {{"host", c.listen_host}, {"port", c.listen_port}}},
            {"time_scale", c.time_scale},
            {"repository_path", c.repository_path},
            {"pool", {{"pool_id", c.pool_id}, {"capacity", c.pool_capacity}}},
            {"scheduler", {{"max_concurrent_experiments", c.max_concurrent_experiments}}},
            {"clarification_ttl_s", c.clarification_ttl.count()},
            {"policy",
             {{"max_concurrent_experiments", c.policy.max_concurrent_experiments},
              {"max_runs_per_request", c.policy.max_runs_per_request},
              {"allowed_modalities", modalities},
              {"per_run_resource_cap", c.policy.per_run_resource_cap}}},
            {"catalog",
             {{"cores", cores},
              {"apps", c.catalog.apps},
              {"emulator_name", c.catalog.emulator_name},
              {"emulator_version", c.catalog.emulator_version},
              {"ota",
               {{"bandwidth_mhz", c.catalog.ota.bandwidth_mhz},
                {"snr0_db", c.catalog.ota.snr0_db},
                {"attenuation_db", c.catalog.ota.attenuation_db},
                {"mimo_layers", c.catalog.ota.mimo_layers},
                {"jitter_std_mbps", c.catalog.ota.jitter_std_mbps}}}}},
            {"defaults",
             {{"duration_s", c.defaults.duration_s},
              {"interval_s", c.defaults.interval_s},
              {"seed", c.defaults.seed},
              {"per_run_resources", per_run}}},
            {"node_delay_ms", delays},
            {"fault_injection", faults}};
}

ServiceConfig load_config(const std::string& path) {
    std::string chosen = path;
    if (const char* env = std::getenv("EXAS_CONFIG"); env && *env) chosen = env;
    if (chosen.empty()) return config_from_json(json::object());
    std::ifstream in(chosen);
    if (!in) throw ValidationError("cannot read configuration " + chosen);
    std::ostringstream ss;
    ss << in.rdbuf();
    json j = json::parse(ss.str(), nullptr, false);
    if (j.is_discarded()) throw ValidationError("configuration " + chosen + " is not valid JSON");
    return config_from_json(j);
}

}  // namespace exas
