#include "exas/orchestrator.hpp"

#include <openssl/rand.h>

#include <algorithm>
#include <cmath>

#include "exas/errors.hpp"
#include "exas/hash.hpp"

namespace exas {

using nlohmann::json;

namespace {

ApiResult error(int status, std::string message) {
    return {status, json{{"error", std::move(message)}}, std::nullopt};
}

std::optional<json> parse_object(std::string_view body) {
    json j = json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return std::nullopt;
    return j;
}

std::string random_token() {
    unsigned char bytes[16];
    if (RAND_bytes(bytes, sizeof bytes) != 1) throw StorageError("no entropy for clarification token");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned char b : bytes) {
        out += hex[b >> 4];
        out += hex[b & 0xf];
    }
    return out;
}

json questions_json(const std::vector<Question>& qs) {
    json out = json::array();
    for (const auto& q : qs) out.push_back({{"field", q.field}, {"question", q.text}});
    return out;
}

std::string join_traffic(const std::vector<TrafficKind>& kinds) {
    std::string out;
    for (auto k : kinds) out += (out.empty() ? "" : ",") + std::string(to_string(k));
    return out;
}

std::string gate_word(bool pass) {
    return pass ? "pass" : "fail";
}

std::chrono::milliseconds to_timeout(double seconds) {
    return std::chrono::milliseconds(static_cast<std::int64_t>(std::llround(seconds * 1000.0)));
}

}  // namespace

ClarificationStore::ClarificationStore(std::chrono::seconds ttl, WallClock clock)
  : ttl_(ttl), clock_(clock ? std::move(clock) : WallClock(utc_now)) {}

std::string ClarificationStore::put(IntentDecision decision) {
    auto token = random_token();
    std::lock_guard lock(mutex_);
    const auto now = clock_();
    std::erase_if(pending_, [&](const auto& kv) { return kv.second.expires_at <= now; });
    pending_[token] = {std::move(decision), now + ttl_};
    return token;
}

std::optional<IntentDecision> ClarificationStore::get(const std::string& token) {
    std::lock_guard lock(mutex_);
    auto it = pending_.find(token);
    if (it == pending_.end()) return std::nullopt;
    if (it->second.expires_at <= clock_()) {
        pending_.erase(it);
        return std::nullopt;
    }
    return it->second.decision;
}

void ClarificationStore::replace(const std::string& token, IntentDecision decision) {
    std::lock_guard lock(mutex_);
    auto it = pending_.find(token);
    if (it != pending_.end()) it->second.decision = std::move(decision);
}

void ClarificationStore::erase(const std::string& token) {
    std::lock_guard lock(mutex_);
    pending_.erase(token);
}

Timestamp ClarificationStore::expires_at(const std::string& token) const {
    std::lock_guard lock(mutex_);
    auto it = pending_.find(token);
    return it == pending_.end() ? Timestamp{} : it->second.expires_at;
}

std::vector<ExperimentDescriptor> build_run_descriptors(const ExperimentPlan& plan, const Catalog& catalog,
                                                        Timestamp created_at, const std::string& pool_id) {
    std::vector<ExperimentDescriptor> out;
    const auto app_version = catalog.apps.contains(plan.app_under_test) ? catalog.apps.at(plan.app_under_test) : "";
    for (const auto& core_name : plan.target_cores) {
        const auto* profile = catalog.find_core(core_name);
        if (!profile) throw ValidationError("core " + core_name + " is not installed");
        const auto host = pool_id + "-host-" + normalize_name(profile->core_name);

        ExperimentDescriptor base;
        base.modality = plan.modality;
        base.created_at = created_at;
        base.software_versions["exas"] = catalog.orchestrator_version;
        base.software_versions[profile->core_name] = profile->version;
        if (!app_version.empty()) base.software_versions[plan.app_under_test] = app_version;
        base.hardware_identifiers["compute_host"] = host;

        auto& topo = base.network_topology;
        auto& cfg = base.configuration;
        if (plan.modality == Modality::in_lab) {
            topo.nodes = {{"ue-0", NodeRole::ue, "sim-ue"},
                          {"gnb-0", NodeRole::gnb, "sim-gnb"},
                          {"core-0", NodeRole::core, profile->core_name},
                          {"dnn-0", NodeRole::dnn, plan.app_under_test},
                          {"chamber-0", NodeRole::chamber, "anechoic-chamber"},
                          {"chamber-1", NodeRole::chamber, "anechoic-chamber"}};
            topo.links = {{"ue-0", "gnb-0", "ota"},
                          {"gnb-0", "core-0", "n2-n3"},
                          {"core-0", "dnn-0", "n6"},
                          {"chamber-0", "chamber-1", "rf"}};
            base.hardware_identifiers["chamber-0"] = pool_id + "-chamber-a";
            base.hardware_identifiers["chamber-1"] = pool_id + "-chamber-b";
            base.hardware_identifiers["sdr"] = pool_id + "-sdr-0";
            cfg["bandwidth_mhz"] = catalog.ota.bandwidth_mhz;
            cfg["snr0_db"] = catalog.ota.snr0_db;
            cfg["attenuation_db"] = catalog.ota.attenuation_db;
            cfg["mimo_layers"] = catalog.ota.mimo_layers;
            cfg["ota_jitter_std_mbps"] = catalog.ota.jitter_std_mbps;
        } else {
            base.software_versions[catalog.emulator_name] = catalog.emulator_version;
            topo.nodes = {{"ue-0", NodeRole::ue, catalog.emulator_name},
                          {"gnb-0", NodeRole::gnb, catalog.emulator_name},
                          {"core-0", NodeRole::core, profile->core_name},
                          {"dnn-0", NodeRole::dnn, plan.app_under_test}};
            topo.links = {{"ue-0", "gnb-0", "radio"}, {"gnb-0", "core-0", "n2-n3"}, {"core-0", "dnn-0", "n6"}};
        }
        cfg["app"] = plan.app_under_test;
        cfg["duration_s"] = std::int64_t{plan.duration_s};
        cfg["interval_s"] = std::int64_t{plan.interval_s};
        cfg["traffic"] = join_traffic(plan.kpi.traffic_kinds);
        cfg["kpi"] = std::string(to_string(plan.kpi.metric)) + " " + std::string(to_string(plan.kpi.comparator)) + " " +
                     json(plan.kpi.threshold).dump() + " " + std::string(to_string(plan.kpi.unit));
        cfg["cpu_cores"] = plan.per_run_resources.cpu_cores;
        cfg["vgpus"] = plan.per_run_resources.vgpus;
        cfg["storage_gb"] = plan.per_run_resources.storage_gb;
        cfg["chambers"] = plan.per_run_resources.chambers;
        cfg["provision_delay_ms"] = profile->provision_delay_ms;
        cfg["profile_tcp_mean_mbps"] = profile->tcp_mean_mbps;
        cfg["profile_udp_mean_mbps"] = profile->udp_mean_mbps;
        cfg["profile_jitter_std_mbps"] = profile->jitter_std_mbps;
        cfg["profile_latency_mean_ms"] = profile->latency_mean_ms;
        for (const auto& [k, v] : plan.template_overrides) cfg[k] = v;

        for (int rep = 0; rep < plan.repetitions; ++rep) {
            auto d = base;
            d.configuration["seed"] = static_cast<std::int64_t>(plan.seed + static_cast<std::uint64_t>(rep));
            if (auto v = validate(d); !v.empty()) {
                throw ValidationError("synthesized descriptor invalid: " + v.front().field_path + ": " + v.front().message);
            }
            out.push_back(seal(std::move(d)));
        }
    }
    return out;
}

json record_to_json(const ExperimentRecord& r, bool with_log) {
    json leases = json::array();
    for (const auto& l : r.leases) leases.push_back(l);
    json runs = json::object();
    for (const auto& [core, ref] : r.run_results) runs[core] = ref;
    json j{{"experiment_id", r.experiment_id},
           {"request_id", r.request_id},
           {"state", to_string(r.state)},
           {"core", r.descriptor.core_implementation()},
           {"modality", to_string(r.descriptor.modality)},
           {"descriptor_id", r.descriptor.descriptor_id},
           {"submitted_at", format_rfc3339(r.submitted_at)},
           {"finished_at", r.finished_at ? json(format_rfc3339(*r.finished_at)) : json(nullptr)},
           {"leases", leases},
           {"run_results", runs},
           {"verdict", r.verdict ? to_json(*r.verdict) : json(nullptr)}};
    if (with_log) j["log"] = log_to_json(r.log);
    return j;
}

Orchestrator::Orchestrator(const ServiceConfig& config, Scheduler& scheduler, Repository& repo,
                           ClarificationStore& tokens, WallClock clock, IntentModelClient* model)
  : config_(config),
    scheduler_(scheduler),
    repo_(repo),
    tokens_(tokens),
    clock_(clock ? std::move(clock) : WallClock(utc_now)),
    model_(model) {}

ApiResult Orchestrator::respond(const IntentDecision& decision, const std::optional<std::string>& token) {
    switch (decision.kind) {
        case DecisionKind::clarification_required: {
            const auto tok = token ? *token : tokens_.put(decision);
            if (token) tokens_.replace(tok, decision);
            return {200,
                    json{{"decision", "clarification_required"},
                         {"questions", questions_json(decision.questions)},
                         {"clarification_token", tok},
                         {"expires_at", format_rfc3339(tokens_.expires_at(tok))}},
                    std::nullopt};
        }
        case DecisionKind::denied:
            if (token) tokens_.erase(*token);
            return {200, json{{"decision", "denied"}, {"reason", decision.reason}}, std::nullopt};
        case DecisionKind::approved: break;
    }
    if (token) tokens_.erase(*token);

    const auto& plan = *decision.plan;
    auto gated = gate(plan, scheduler_.pool().free(), config_.policy);
    if (gated.kind == DecisionKind::denied) {
        return {200, json{{"decision", "denied"}, {"reason", gated.reason}}, std::nullopt};
    }
    std::vector<ExperimentDescriptor> descriptors;
    try {
        descriptors = build_run_descriptors(plan, config_.catalog, clock_(), config_.pool_id);
    } catch (const ValidationError& e) {
        return {200, json{{"decision", "denied"}, {"reason", e.what()}}, std::nullopt};
    }
    RequestTicket ticket;
    try {
        ticket = scheduler_.submit_request(plan, descriptors);
    } catch (const AdmissionError& e) {
        return {503, json{{"error", e.what()}, {"retryable", true}}, std::nullopt};
    } catch (const StateError& e) {
        return error(503, e.what());
    }
    json ids = json::array();
    for (const auto& id : ticket.experiment_ids) ids.push_back(id);
    json descriptor_ids = json::array();
    for (const auto& d : descriptors) descriptor_ids.push_back(d.descriptor_id);
    return {202,
            json{{"decision", "approved"},
                 {"request_id", ticket.request_id},
                 {"experiment_ids", ids},
                 {"descriptor_ids", descriptor_ids},
                 {"plan", plan}},
            std::nullopt};
}

ApiResult Orchestrator::handle_submit(std::string_view body) {
    const auto j = parse_object(body);
    if (!j) return error(400, "body must be a JSON object");
    const auto it = j->find("user_request");
    if (it == j->end() || !it->is_string()) return error(400, "user_request must be a string");
    const auto text = it->get<std::string>();
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) return error(400, "user_request must not be empty");
    return respond(interpret(text, config_.catalog, config_.defaults, model_), std::nullopt);
}

ApiResult Orchestrator::handle_clarify(const std::string& token, std::string_view body) {
    const auto j = parse_object(body);
    if (!j) return error(400, "body must be a JSON object");
    std::optional<std::string> answer;
    for (const char* key : {"answer", "user_request", "text"}) {
        if (auto it = j->find(key); it != j->end() && it->is_string()) {
            answer = it->get<std::string>();
            break;
        }
    }
    if (!answer) return error(400, "answer must be a string");
    const auto previous = tokens_.get(token);
    if (!previous) return error(404, "unknown or expired clarification token");
    return respond(merge_clarification(*previous, *answer, config_.catalog, config_.defaults), token);
}

ApiResult Orchestrator::handle_status(const std::string& id) const {
    if (auto rec = scheduler_.find(id)) return {200, record_to_json(*rec), std::nullopt};
    if (auto b = repo_.lookup(id)) {
        json j = to_json(*b);
        try {
            j["log"] = json::parse(repo_.get_object(b->log_ref)).at("entries");
        } catch (const std::exception&) {
            j["log"] = nullptr;
        }
        j["leases"] = json::array();
        return {200, j, std::nullopt};
    }
    return error(404, "unknown experiment " + id);
}

ApiResult Orchestrator::handle_results(const std::string& id, bool csv) const {
    std::optional<std::string> ref;
    if (auto rec = scheduler_.find(id)) {
        if (rec->state != ExperimentState::completed) {
            return error(409, "experiment " + id + " is " + std::string(to_string(rec->state)) + "; no results");
        }
        if (!rec->run_results.empty()) ref = rec->run_results.begin()->second;
    } else if (auto b = repo_.lookup(id)) {
        if (!b->metrics_ref) return error(409, "experiment " + id + " is " + std::string(to_string(b->state)) + "; no results");
        ref = b->metrics_ref;
    } else {
        return error(404, "unknown experiment " + id);
    }
    if (!ref) return error(409, "experiment " + id + " has no metrics archive");
    json archive;
    try {
        archive = json::parse(repo_.get_object(*ref));
    } catch (const NotFound& e) {
        return error(500, e.what());
    }
    if (csv) return {200, nullptr, metrics_csv(archive), "text/csv"};
    archive["experiment_id"] = id;
    archive["metrics_ref"] = *ref;
    return {200, archive, std::nullopt};
}

ApiResult Orchestrator::handle_gate_wait(const std::string& id, double timeout_s) const {
    if (!(timeout_s >= 0.0) || timeout_s > 86400.0) return error(400, "timeout_s must be within [0, 86400]");
    if (scheduler_.find(id)) {
        const bool done = scheduler_.wait_terminal(id, to_timeout(timeout_s));
        const auto rec = scheduler_.snapshot(id);
        json j{{"experiment_id", id}, {"state", to_string(rec.state)}};
        if (!done) {
            j["result"] = "timeout";
            return {200, j, std::nullopt};
        }
        const bool pass = rec.state == ExperimentState::completed && rec.verdict && rec.verdict->overall_pass &&
                          !rec.verdict->partial;
        j["result"] = gate_word(pass);
        j["verdict"] = rec.verdict ? to_json(*rec.verdict) : json(nullptr);
        return {200, j, std::nullopt};
    }
    if (auto b = repo_.lookup(id)) {
        json j{{"experiment_id", id}, {"state", to_string(b->state)}, {"verdict", nullptr}};
        bool pass = false;
        if (b->metrics_ref) {
            const auto v = verdict_from_json(json::parse(repo_.get_object(*b->metrics_ref)).at("verdict"));
            pass = v.overall_pass && !v.partial;
            j["verdict"] = to_json(v);
        }
        j["result"] = gate_word(pass);
        return {200, j, std::nullopt};
    }
    return error(404, "unknown experiment " + id);
}

ApiResult Orchestrator::handle_attenuation(const std::string& id, std::string_view body) {
    const auto j = parse_object(body);
    if (!j) return error(400, "body must be a JSON object");
    const auto it = j->find("value_db");
    if (it == j->end() || !it->is_number()) return error(400, "value_db must be a number");
    try {
        const auto c = scheduler_.set_attenuation(id, it->get<double>());
        return {200,
                json{{"experiment_id", id},
                     {"attenuation_db", c.attenuation_db},
                     {"expected_mbps", channel_throughput(c)}},
                std::nullopt};
    } catch (const UnknownExperiment& e) {
        return error(404, e.what());
    } catch (const StateError& e) {
        return error(409, e.what());
    } catch (const RangeError& e) {
        return error(400, e.what());
    }
}

ApiResult Orchestrator::handle_cancel(const std::string& id) {
    try {
        const auto ack = scheduler_.cancel(id);
        return {200,
                json{{"experiment_id", id}, {"state", to_string(ack.state)}, {"already_terminal", ack.already_terminal}},
                std::nullopt};
    } catch (const UnknownExperiment&) {
        if (auto b = repo_.lookup(id)) {
            return {200, json{{"experiment_id", id}, {"state", to_string(b->state)}, {"already_terminal", true}},
                    std::nullopt};
        }
        return error(404, "unknown experiment " + id);
    }
}

ApiResult Orchestrator::handle_query(const std::map<std::string, std::string>& params) const {
    QueryFilter f;
    try {
        for (const auto& [key, value] : params) {
            if (key == "core_name") {
                f.core_name = value;
            } else if (key == "modality") {
                f.modality = modality_from_string(value);
                if (!f.modality) return error(400, "unknown modality " + value);
            } else if (key == "state") {
                f.state = state_from_string(value);
                if (!f.state) return error(400, "unknown state " + value);
            } else if (key == "from") {
                f.submitted_from = parse_rfc3339(value);
            } else if (key == "to") {
                f.submitted_to = parse_rfc3339(value);
            } else if (key == "descriptor_ref") {
                f.descriptor_ref = value;
            } else if (key == "list_all") {
                f.list_all = value != "false" && value != "0";
            } else {
                return error(400, "unknown query parameter " + key);
            }
        }
    } catch (const ValidationError& e) {
        return error(400, e.what());
    }
    if (!f.valid()) f.list_all = true;
    json rows = json::array();
    for (const auto& b : repo_.query(f)) rows.push_back(to_json(b));
    json body{{"experiments", rows}, {"count", rows.size()}};
    if (params.empty()) {
        json active = json::array();
        for (const auto& r : scheduler_.snapshots()) {
            if (!is_terminal(r.state)) active.push_back(record_to_json(r, false));
        }
        body["active"] = active;
    }
    return {200, body, std::nullopt};
}

ApiResult Orchestrator::handle_request_status(const std::string& request_id) const {
    const auto s = scheduler_.request_status(request_id);
    if (!s) return error(404, "unknown request " + request_id);
    json experiments = json::array();
    for (const auto& r : s->experiments) experiments.push_back(record_to_json(r, false));
    return {200,
            json{{"request_id", s->request_id},
                 {"submitted_at", format_rfc3339(s->submitted_at)},
                 {"plan", s->plan},
                 {"terminal", s->terminal},
                 {"experiments", experiments},
                 {"verdict", s->verdict ? to_json(*s->verdict) : json(nullptr)}},
            std::nullopt};
}

ApiResult Orchestrator::handle_request_gate(const std::string& request_id, double timeout_s) const {
    if (!(timeout_s >= 0.0) || timeout_s > 86400.0) return error(400, "timeout_s must be within [0, 86400]");
    if (!scheduler_.request_status(request_id)) return error(404, "unknown request " + request_id);
    const bool done = scheduler_.wait_request(request_id, to_timeout(timeout_s));
    const auto s = *scheduler_.request_status(request_id);
    json states = json::object();
    for (const auto& r : s.experiments) states[r.experiment_id] = to_string(r.state);
    json j{{"request_id", request_id}, {"experiments", states}};
    if (!done) {
        j["result"] = "timeout";
    } else {
        j["result"] = gate_word(s.gate_pass());
        j["verdict"] = to_json(*s.verdict);
    }
    return {200, j, std::nullopt};
}

ApiResult Orchestrator::handle_request_cancel(const std::string& request_id) {
    try {
        json acks = json::array();
        for (const auto& a : scheduler_.cancel_request(request_id)) {
            acks.push_back({{"experiment_id", a.experiment_id},
                            {"state", to_string(a.state)},
                            {"already_terminal", a.already_terminal}});
        }
        return {200, json{{"request_id", request_id}, {"experiments", acks}}, std::nullopt};
    } catch (const UnknownExperiment&) {
        return error(404, "unknown request " + request_id);
    }
}

}  // namespace exas
