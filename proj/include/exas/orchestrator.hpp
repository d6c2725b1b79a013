#pragma once

#include <chrono>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "exas/config.hpp"
#include "exas/intent.hpp"
#include "exas/repository.hpp"
#include "exas/scheduler.hpp"

namespace exas {

// HTTP status plus body. text is used instead of body for non-JSON payloads
// (CSV results).
struct ApiResult {
    int status = 200;
    nlohmann::json body;
    std::optional<std::string> text;
    std::string content_type = "application/json";
};

// Pending clarification dialogues keyed by an unguessable token. Shared by
// every API instance in a process.
class ClarificationStore {
  public:
    explicit ClarificationStore(std::chrono::seconds ttl = std::chrono::minutes(15), WallClock clock = utc_now);

    std::string put(IntentDecision decision);
    // nullopt for unknown or expired tokens.
    std::optional<IntentDecision> get(const std::string& token);
    void replace(const std::string& token, IntentDecision decision);
    void erase(const std::string& token);
    Timestamp expires_at(const std::string& token) const;

  private:
    struct Pending {
        IntentDecision decision;
        Timestamp expires_at{};
    };
    std::chrono::seconds ttl_;
    WallClock clock_;
    mutable std::mutex mutex_;
    std::map<std::string, Pending> pending_;
};

// One self-contained descriptor per run, cores in plan order, repetitions
// of one core adjacent. Repetition r runs with seed plan.seed + r.
std::vector<ExperimentDescriptor> build_run_descriptors(const ExperimentPlan& plan, const Catalog& catalog,
                                                        Timestamp created_at, const std::string& pool_id = "lab");

nlohmann::json record_to_json(const ExperimentRecord& r, bool with_log = true);

// Request handlers behind the REST routes. Holds no experiment state of its
// own; everything is read from the scheduler and the repository.
class Orchestrator {
  public:
    Orchestrator(const ServiceConfig& config, Scheduler& scheduler, Repository& repo, ClarificationStore& tokens,
                 WallClock clock = utc_now, IntentModelClient* model = nullptr);

    ApiResult handle_submit(std::string_view body);
    ApiResult handle_clarify(const std::string& token, std::string_view body);
    ApiResult handle_status(const std::string& experiment_id) const;
    ApiResult handle_results(const std::string& experiment_id, bool csv = false) const;
    ApiResult handle_gate_wait(const std::string& experiment_id, double timeout_s) const;
    ApiResult handle_attenuation(const std::string& experiment_id, std::string_view body);
    ApiResult handle_cancel(const std::string& experiment_id);
    ApiResult handle_query(const std::map<std::string, std::string>& params) const;

    ApiResult handle_request_status(const std::string& request_id) const;
    ApiResult handle_request_gate(const std::string& request_id, double timeout_s) const;
    ApiResult handle_request_cancel(const std::string& request_id);

    Scheduler& scheduler() noexcept { return scheduler_; }

  private:
    ApiResult respond(const IntentDecision& decision, const std::optional<std::string>& token);

    const ServiceConfig& config_;
    Scheduler& scheduler_;
    Repository& repo_;
    ClarificationStore& tokens_;
    WallClock clock_;
    IntentModelClient* model_;
};

}  // namespace exas
