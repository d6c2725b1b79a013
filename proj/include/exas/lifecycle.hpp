#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "exas/descriptor.hpp"
#include "exas/intent.hpp"
#include "exas/telemetry.hpp"
#include "exas/time.hpp"

namespace exas {

enum class ExperimentState { queued, provisioning, running, collecting, tearing_down, completed, failed, cancelled };

std::string_view to_string(ExperimentState s) noexcept;
std::optional<ExperimentState> state_from_string(std::string_view s) noexcept;
bool is_terminal(ExperimentState s) noexcept;

enum class EventKind { start, provisioned, measurement_done, collected, torn_down, fault, cancel };

std::string_view to_string(EventKind k) noexcept;

struct LifecycleEvent {
    EventKind kind = EventKind::start;
    std::string phase;
    std::string message;

    static LifecycleEvent fault(std::string phase, std::string message) {
        return {EventKind::fault, std::move(phase), std::move(message)};
    }
};

struct LogEntry {
    Timestamp at{};
    std::string phase;
    std::string message;
};

// Outcome waiting behind tearing_down.
enum class PendingOutcome { none, completed, failed, cancelled };

struct ExperimentRecord {
    std::string experiment_id;
    std::string request_id;
    ExperimentPlan plan;
    ExperimentDescriptor descriptor;
    ExperimentState state = ExperimentState::queued;
    PendingOutcome pending = PendingOutcome::none;
    std::vector<std::string> leases;
    std::map<std::string, std::string> run_results;  // core -> metrics archive ref
    std::vector<LogEntry> log;
    std::optional<KpiVerdict> verdict;
    Timestamp submitted_at{};
    std::optional<Timestamp> finished_at;
};

// Applies one transition and appends one log entry:
//   queued -start-> provisioning -provisioned-> running -measurement_done->
//   collecting -collected-> tearing_down -torn_down-> completed|failed|cancelled
// fault and cancel route any pre-terminal state to tearing_down. Throws
// IllegalTransition naming the state and event.
ExperimentRecord advance(ExperimentRecord record, const LifecycleEvent& event, Timestamp at);

nlohmann::json log_to_json(const std::vector<LogEntry>& log);

}  // namespace exas
