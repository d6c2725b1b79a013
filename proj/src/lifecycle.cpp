#include "exas/lifecycle.hpp"

#include "exas/errors.hpp"

namespace exas {

std::string_view to_string(ExperimentState s) noexcept {
    switch (s) {
        case ExperimentState::queued: return "queued";
        case ExperimentState::provisioning: return "provisioning";
        case ExperimentState::running: return "running";
        case ExperimentState::collecting: return "collecting";
        case ExperimentState::tearing_down: return "tearing_down";
        case ExperimentState::completed: return "completed";
        case ExperimentState::failed: return "failed";
        case ExperimentState::cancelled: return "cancelled";
    }
    return "unknown";
}

std::optional<ExperimentState> state_from_string(std::string_view s) noexcept {
    for (auto st : {ExperimentState::queued, ExperimentState::provisioning, ExperimentState::running,
                    ExperimentState::collecting, ExperimentState::tearing_down, ExperimentState::completed,
                    ExperimentState::failed, ExperimentState::cancelled}) {
        if (to_string(st) == s) return st;
    }
    return std::nullopt;
}

bool is_terminal(ExperimentState s) noexcept {
    return s == ExperimentState::completed || s == ExperimentState::failed || s == ExperimentState::cancelled;
}

std::string_view to_string(EventKind k) noexcept {
    switch (k) {
        case EventKind::start: return "start";
        case EventKind::provisioned: return "provisioned";
        case EventKind::measurement_done: return "measurement_done";
        case EventKind::collected: return "collected";
        case EventKind::torn_down: return "torn_down";
        case EventKind::fault: return "fault";
        case EventKind::cancel: return "cancel";
    }
    return "unknown";
}

ExperimentRecord advance(ExperimentRecord r, const LifecycleEvent& e, Timestamp at) {
    using S = ExperimentState;
    auto illegal = [&](std::string_view why = {}) {
        std::string msg = "illegal transition: event " + std::string(to_string(e.kind)) + " in state " +
                          std::string(to_string(r.state));
        if (!why.empty()) msg += " (" + std::string(why) + ")";
        return IllegalTransition(msg);
    };
    if (is_terminal(r.state)) throw illegal();

    const bool pre_teardown = r.state != S::tearing_down;
    std::string message = std::string(to_string(e.kind));

    switch (e.kind) {
        case EventKind::start:
            if (r.state != S::queued) throw illegal();
            r.state = S::provisioning;
            break;
        case EventKind::provisioned:
            if (r.state != S::provisioning) throw illegal();
            r.state = S::running;
            break;
        case EventKind::measurement_done:
            if (r.state != S::running) throw illegal();
            r.state = S::collecting;
            break;
        case EventKind::collected:
            if (r.state != S::collecting) throw illegal();
            r.state = S::tearing_down;
            r.pending = PendingOutcome::completed;
            break;
        case EventKind::fault:
            if (!pre_teardown) throw illegal();
            r.state = S::tearing_down;
            r.pending = PendingOutcome::failed;
            message = "fault in " + e.phase + ": " + e.message;
            break;
        case EventKind::cancel:
            if (!pre_teardown) throw illegal();
            r.state = S::tearing_down;
            r.pending = PendingOutcome::cancelled;
            message = e.message.empty() ? "cancel requested" : "cancel: " + e.message;
            break;
        case EventKind::torn_down:
            if (r.state != S::tearing_down) throw illegal();
            if (!r.leases.empty()) throw illegal("leases still held");
            switch (r.pending) {
                case PendingOutcome::completed:
                    if (!r.verdict) throw illegal("completion without a verdict");
                    r.state = S::completed;
                    break;
                case PendingOutcome::failed: r.state = S::failed; break;
                case PendingOutcome::cancelled: r.state = S::cancelled; break;
                case PendingOutcome::none: throw illegal("no pending outcome");
            }
            if (r.state != S::completed) r.verdict.reset();
            r.pending = PendingOutcome::none;
            r.finished_at = at;
            break;
    }
    if (!e.message.empty() && e.kind != EventKind::fault && e.kind != EventKind::cancel) message += ": " + e.message;
    r.log.push_back({at, std::string(to_string(r.state)), std::move(message)});
    return r;
}

nlohmann::json log_to_json(const std::vector<LogEntry>& log) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& e : log) out.push_back({{"at", format_rfc3339(e.at)}, {"phase", e.phase}, {"message", e.message}});
    return out;
}

}  // namespace exas
