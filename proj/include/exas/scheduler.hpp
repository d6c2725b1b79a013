#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "exas/drivers.hpp"
#include "exas/lifecycle.hpp"
#include "exas/pool.hpp"
#include "exas/repository.hpp"

namespace exas {

struct SchedulerOptions {
    int max_concurrent_experiments = 16;
    WallClock clock = utc_now;
};

struct SampleEvent {
    std::string core;
    TrafficKind traffic = TrafficKind::tcp;
    double t_offset_s = 0.0;
    double mbps = 0.0;
};

// One entry of an experiment's event stream. kind is "state", "sample" or
// "attenuation"; the last event of a stream is the terminal state event and
// carries the verdict when there is one.
struct StatusEvent {
    std::uint64_t seq = 0;
    std::string kind;
    std::string experiment_id;
    ExperimentState state = ExperimentState::queued;
    Timestamp at{};
    std::optional<SampleEvent> sample;
    std::optional<KpiVerdict> verdict;
    std::string message;
};

nlohmann::json to_json(const StatusEvent& e);

struct EventBatch {
    std::vector<StatusEvent> events;
    bool closed = false;  // terminal event delivered, nothing follows
};

struct CancelAck {
    std::string experiment_id;
    ExperimentState state = ExperimentState::queued;
    bool already_terminal = false;
};

// Ids returned by one admission. A request with several cores (or
// repetitions) becomes one experiment per run so each run keeps its own
// descriptor, lease, lifecycle and archive.
struct RequestTicket {
    std::string request_id;
    std::vector<std::string> experiment_ids;
};

struct RequestStatus {
    std::string request_id;
    ExperimentPlan plan;
    Timestamp submitted_at{};
    std::vector<ExperimentRecord> experiments;
    bool terminal = false;
    // Over all runs once every experiment is terminal.
    std::optional<KpiVerdict> verdict;

    // Every run completed and passed.
    bool gate_pass() const noexcept;
};

// Combines per-experiment verdicts into a request verdict. Experiments that
// did not complete contribute no runs and make the verdict partial.
KpiVerdict combine_verdicts(const KpiCriterion& criterion, const std::vector<ExperimentRecord>& experiments,
                            const std::vector<std::string>& run_labels);

class Scheduler {
  public:
    Scheduler(ResourcePool& pool, DriverSet& drivers, Repository& repo, SchedulerOptions options = {});
    ~Scheduler();

    Scheduler(const Scheduler&) = delete;
    Scheduler& operator=(const Scheduler&) = delete;

    // Queues one experiment per descriptor, all under one request id.
    // Descriptors must be valid and sealed, one per run of the plan. Throws
    // AdmissionError when the plan's total demand exceeds live free capacity,
    // ValidationError otherwise.
    RequestTicket submit_request(const ExperimentPlan& plan, const std::vector<ExperimentDescriptor>& descriptors);
    std::string submit(const ExperimentPlan& plan, const ExperimentDescriptor& descriptor);

    // Throws UnknownExperiment.
    CancelAck cancel(const std::string& experiment_id);
    std::vector<CancelAck> cancel_request(const std::string& request_id);

    // Throws UnknownExperiment.
    ExperimentRecord snapshot(const std::string& experiment_id) const;
    std::optional<ExperimentRecord> find(const std::string& experiment_id) const;
    std::vector<ExperimentRecord> snapshots() const;
    std::optional<RequestStatus> request_status(const std::string& request_id) const;

    // True once terminal and archived.
    bool wait_terminal(const std::string& experiment_id, std::chrono::milliseconds timeout) const;
    bool wait_request(const std::string& request_id, std::chrono::milliseconds timeout) const;
    // Returns at most once every experiment is terminal, or on timeout.
    bool wait_idle(std::chrono::milliseconds timeout) const;

    // Events from index `from` on. Blocks up to timeout for the first new
    // one. Throws UnknownExperiment.
    EventBatch events_since(const std::string& experiment_id, std::size_t from,
                            std::chrono::milliseconds timeout) const;

    // sim-ota experiments in running state only (StateError otherwise).
    // Throws RangeError for values outside [0, 120] dB.
    ChannelState set_attenuation(const std::string& experiment_id, double value_db);

    // Cancels everything still live and joins all threads.
    void shutdown();

    ResourcePool& pool() noexcept { return pool_; }
    Repository& repository() noexcept { return repo_; }

  private:
    struct Entry {
        ExperimentRecord record;
        std::string run_label;
        std::optional<Lease> lease;
        std::shared_ptr<DriverHandle> handle;
        std::vector<StatusEvent> events;
        bool finalized = false;
        std::jthread worker;
    };
    struct Request {
        ExperimentPlan plan;
        Timestamp submitted_at{};
        std::vector<std::string> experiment_ids;
    };

    void dispatch_loop(std::stop_token stop);
    void run(Entry& e, std::stop_token stop);
    void transition(Entry& e, const LifecycleEvent& event);
    void transition_locked(Entry& e, const LifecycleEvent& event);
    void push_event_locked(Entry& e, std::string kind, std::string message = {});
    void teardown(Entry& e, Driver& driver);
    void finalize(Entry& e);
    Entry& entry_locked(const std::string& id) const;
    bool request_terminal_locked(const Request& r) const;
    RequestStatus request_status_locked(const std::string& id, const Request& r) const;

    ResourcePool& pool_;
    DriverSet& drivers_;
    Repository& repo_;
    SchedulerOptions options_;

    mutable std::mutex mutex_;
    mutable std::condition_variable cv_;
    std::map<std::string, std::unique_ptr<Entry>> entries_;
    std::map<std::string, Request> requests_;
    std::deque<std::string> queue_;
    int active_ = 0;
    bool stopping_ = false;
    std::uint64_t generation_ = 0;  // bumped whenever a dispatch could now succeed
    std::jthread dispatcher_;
};

}  // namespace exas
