#include "exas/scheduler.hpp"

#include <algorithm>
#include <cstdio>

#include "exas/errors.hpp"

namespace exas {

using nlohmann::json;

json to_json(const StatusEvent& e) {
    json j{{"seq", e.seq},
           {"event", e.kind},
           {"experiment_id", e.experiment_id},
           {"state", to_string(e.state)},
           {"timestamp", format_rfc3339(e.at)}};
    if (e.sample) {
        j["sample"] = {{"core", e.sample->core},
                       {"traffic", to_string(e.sample->traffic)},
                       {"t_offset_s", e.sample->t_offset_s},
                       {"mbps", e.sample->mbps}};
    }
    if (e.verdict) j["verdict"] = to_json(*e.verdict);
    if (!e.message.empty()) j["message"] = e.message;
    return j;
}

bool RequestStatus::gate_pass() const noexcept {
    return terminal && verdict && verdict->overall_pass && !verdict->partial;
}

KpiVerdict combine_verdicts(const KpiCriterion& criterion, const std::vector<ExperimentRecord>& experiments,
                            const std::vector<std::string>& run_labels) {
    KpiVerdict v;
    v.criterion = criterion;
    for (std::size_t i = 0; i < experiments.size(); ++i) {
        const auto& rec = experiments[i];
        if (rec.state != ExperimentState::completed || !rec.verdict) {
            v.partial = true;
            continue;
        }
        const auto& label = i < run_labels.size() ? run_labels[i] : rec.descriptor.core_implementation();
        for (const auto& [key, outcome] : rec.verdict->per_run) v.per_run[{label, key.traffic}] = outcome;
        v.partial = v.partial || rec.verdict->partial;
    }
    v.overall_pass = !v.per_run.empty() &&
                     std::all_of(v.per_run.begin(), v.per_run.end(), [](const auto& kv) { return kv.second.pass; });
    return v;
}

Scheduler::Scheduler(ResourcePool& pool, DriverSet& drivers, Repository& repo, SchedulerOptions options)
  : pool_(pool), drivers_(drivers), repo_(repo), options_(std::move(options)) {
    if (options_.max_concurrent_experiments < 1) throw ValidationError("max_concurrent_experiments must be >= 1");
    if (!options_.clock) options_.clock = utc_now;
    dispatcher_ = std::jthread([this](std::stop_token st) { dispatch_loop(st); });
}

Scheduler::~Scheduler() {
    shutdown();
}

RequestTicket Scheduler::submit_request(const ExperimentPlan& plan, const std::vector<ExperimentDescriptor>& descriptors) {
    if (plan.target_cores.empty() || plan.repetitions < 1) throw ValidationError("plan has no runs");
    if (descriptors.size() != static_cast<std::size_t>(plan.runs())) {
        throw ValidationError("expected " + std::to_string(plan.runs()) + " descriptors, got " +
                              std::to_string(descriptors.size()));
    }
    if (!plan.per_run_resources.non_negative() || !plan.per_run_resources.any_positive()) {
        throw ValidationError("per-run resources must be non-negative and non-zero");
    }
    for (std::size_t i = 0; i < descriptors.size(); ++i) {
        const auto& d = descriptors[i];
        if (auto v = validate(d); !v.empty()) {
            throw ValidationError("descriptor " + std::to_string(i) + ": " + v.front().field_path + ": " + v.front().message);
        }
        if (d.descriptor_id.empty()) throw ValidationError("descriptor " + std::to_string(i) + " is not sealed");
        if (d.modality != plan.modality) throw ValidationError("descriptor modality differs from plan");
        const auto& core = plan.target_cores[i / static_cast<std::size_t>(plan.repetitions)];
        if (normalize_name(d.core_implementation()) != normalize_name(core)) {
            throw ValidationError("descriptor " + std::to_string(i) + " runs " + d.core_implementation() +
                                  ", plan expects " + core);
        }
    }

    const auto now = options_.clock();
    RequestTicket ticket;
    std::lock_guard lock(mutex_);
    if (stopping_) throw StateError("scheduler is shutting down");
    const auto free = pool_.free();
    if (auto axis = plan.total_demand().first_exceeding_axis(free)) {
        throw AdmissionError("insufficient live capacity on " + std::string(*axis) + ": demand " +
                             plan.total_demand().to_string() + ", free " + free.to_string());
    }
    ticket.request_id = repo_.next_request_id(now);
    Request req{plan, now, {}};
    for (std::size_t i = 0; i < descriptors.size(); ++i) {
        const auto rep = static_cast<int>(i % static_cast<std::size_t>(plan.repetitions));
        auto e = std::make_unique<Entry>();
        auto& r = e->record;
        r.experiment_id = repo_.next_experiment_id(now);
        r.request_id = ticket.request_id;
        r.descriptor = descriptors[i];
        r.plan = plan;
        r.plan.target_cores = {descriptors[i].core_implementation()};
        r.plan.repetitions = 1;
        r.plan.seed = static_cast<std::uint64_t>(descriptors[i].config_number("seed").value_or(plan.seed));
        r.submitted_at = now;
        r.log.push_back({now, "queued", "submitted as part of " + ticket.request_id});
        e->run_label = plan.repetitions > 1 ? r.plan.target_cores.front() + "#" + std::to_string(rep + 1)
                                            : r.plan.target_cores.front();
        push_event_locked(*e, "state", "queued");
        queue_.push_back(r.experiment_id);
        ticket.experiment_ids.push_back(r.experiment_id);
        req.experiment_ids.push_back(r.experiment_id);
        entries_.emplace(r.experiment_id, std::move(e));
    }
    requests_.emplace(ticket.request_id, std::move(req));
    ++generation_;
    cv_.notify_all();
    return ticket;
}

std::string Scheduler::submit(const ExperimentPlan& plan, const ExperimentDescriptor& descriptor) {
    auto single = plan;
    single.target_cores = {descriptor.core_implementation()};
    single.repetitions = 1;
    return submit_request(single, {descriptor}).experiment_ids.front();
}

void Scheduler::dispatch_loop(std::stop_token stop) {
    std::unique_lock lock(mutex_);
    std::uint64_t seen = generation_ - 1;
    while (!stopping_ && !stop.stop_requested()) {
        if (seen != generation_) {
            seen = generation_;
            while (!queue_.empty() && active_ < options_.max_concurrent_experiments) {
                Entry& e = *entries_.at(queue_.front());
                try {
                    e.lease = pool_.allocate(e.record.experiment_id, e.record.plan.per_run_resources);
                } catch (const InsufficientCapacity&) {
                    break;  // retried on the next release
                }
                queue_.pop_front();
                ++active_;
                e.record.leases = {e.lease->lease_id};
                transition_locked(e, {EventKind::start, "provisioning", "lease " + e.lease->lease_id + " " +
                                                                            e.lease->amount.to_string()});
                e.worker = std::jthread([this, &e](std::stop_token st) { run(e, st); });
            }
        }
        cv_.wait(lock, [&] { return stopping_ || stop.stop_requested() || seen != generation_; });
    }
}

void Scheduler::run(Entry& e, std::stop_token stop) {
    ExperimentDescriptor d;
    ExperimentPlan plan;
    Lease lease;
    std::string id;
    {
        std::lock_guard lock(mutex_);
        d = e.record.descriptor;
        plan = e.record.plan;
        lease = *e.lease;
        id = e.record.experiment_id;
    }
    Driver& driver = drivers_.for_modality(d.modality);
    const auto core = d.core_implementation();
    bool ended = false;
    auto end_with = [&](EventKind kind, std::string phase, std::string message) {
        transition(e, {kind, std::move(phase), std::move(message)});
        ended = true;
    };

    std::shared_ptr<DriverHandle> handle;
    try {
        handle = driver.provision(d, lease, stop);
        std::lock_guard lock(mutex_);
        e.handle = handle;
    } catch (const Error& err) {
        if (stop.stop_requested()) {
            end_with(EventKind::cancel, "provisioning", "");
        } else {
            end_with(EventKind::fault, "provisioning", err.what());
        }
    }
    if (!ended && stop.stop_requested()) end_with(EventKind::cancel, "provisioning", "");
    if (!ended) transition(e, {EventKind::provisioned, "provisioning", handle->handle_id()});

    std::vector<ThroughputTrace> traces;
    const int duration = static_cast<int>(d.config_number("duration_s").value_or(plan.duration_s));
    const int interval = static_cast<int>(d.config_number("interval_s").value_or(plan.interval_s));
    for (auto traffic : plan.kpi.traffic_kinds) {
        if (ended) break;
        auto sink = [&, traffic](const Sample& s) {
            std::lock_guard lock(mutex_);
            push_event_locked(e, "sample");
            e.events.back().sample = SampleEvent{core, traffic, s.t_offset_s, s.mbps};
            cv_.notify_all();
        };
        try {
            auto trace = driver.run_measurement(*handle, traffic, duration, interval, stop, sink);
            trace.experiment_id = id;
            if (trace.truncated || stop.stop_requested()) {
                end_with(EventKind::cancel, "running", "");
                break;
            }
            traces.push_back(std::move(trace));
        } catch (const Error& err) {
            end_with(EventKind::fault, "running", err.what());
        }
    }
    if (!ended) transition(e, {EventKind::measurement_done, "running", std::to_string(traces.size()) + " traces"});

    if (!ended) {
        try {
            std::map<RunKey, TraceSummary> summaries;
            for (const auto& t : traces) summaries[{t.core_name, t.traffic}] = summarize_for(t, plan.kpi.metric);
            std::vector<RunKey> requested;
            for (auto traffic : plan.kpi.traffic_kinds) requested.push_back({core, traffic});
            auto verdict = evaluate_kpi(summaries, plan.kpi, requested);
            const auto ref = archive_metrics(repo_, id, d.descriptor_id, traces, summaries, verdict);
            std::lock_guard lock(mutex_);
            e.record.verdict = std::move(verdict);
            e.record.run_results[core] = ref;
            transition_locked(e, {EventKind::collected, "collecting", "metrics " + ref});
        } catch (const Error& err) {
            end_with(EventKind::fault, "collecting", err.what());
        }
    }

    teardown(e, driver);
    finalize(e);
}

void Scheduler::transition(Entry& e, const LifecycleEvent& event) {
    std::lock_guard lock(mutex_);
    transition_locked(e, event);
}

void Scheduler::transition_locked(Entry& e, const LifecycleEvent& event) {
    e.record = advance(std::move(e.record), event, options_.clock());
    // The terminal event is published by finalize, after archiving.
    if (!is_terminal(e.record.state)) push_event_locked(e, "state", e.record.log.back().message);
    cv_.notify_all();
}

void Scheduler::push_event_locked(Entry& e, std::string kind, std::string message) {
    StatusEvent ev;
    ev.seq = e.events.size();
    ev.kind = std::move(kind);
    ev.experiment_id = e.record.experiment_id;
    ev.state = e.record.state;
    ev.at = options_.clock();
    ev.message = std::move(message);
    e.events.push_back(std::move(ev));
}

void Scheduler::teardown(Entry& e, Driver& driver) {
    std::shared_ptr<DriverHandle> handle;
    std::optional<Lease> lease;
    {
        std::lock_guard lock(mutex_);
        handle = e.handle;
        lease = e.lease;
    }
    std::size_t destroyed = 0;
    if (handle) {
        if (handle->live()) destroyed = handle->topology().size();
        driver.teardown(*handle);
    }
    if (lease) pool_.release(lease->lease_id);

    std::lock_guard lock(mutex_);
    std::string message = "destroyed " + std::to_string(destroyed) + " components";
    if (lease) message += ", released " + lease->lease_id;
    e.lease.reset();
    e.record.leases.clear();
    e.record.log.push_back({options_.clock(), "teardown", message});
    if (lease) --active_;
    ++generation_;
    transition_locked(e, {EventKind::torn_down, "tearing_down", ""});
}

void Scheduler::finalize(Entry& e) {
    ExperimentRecord rec;
    {
        std::lock_guard lock(mutex_);
        rec = e.record;
    }
    try {
        ExperimentBundle b;
        b.experiment_id = rec.experiment_id;
        b.request_id = rec.request_id;
        b.descriptor_ref = repo_.put_object(serialize_descriptor(rec.descriptor));
        const json log{{"experiment_id", rec.experiment_id},
                       {"request_id", rec.request_id},
                       {"descriptor_id", rec.descriptor.descriptor_id},
                       {"final_state", to_string(rec.state)},
                       {"entries", log_to_json(rec.log)}};
        b.log_ref = repo_.put_object(log.dump());
        if (rec.state == ExperimentState::completed && !rec.run_results.empty()) {
            b.metrics_ref = rec.run_results.begin()->second;
        }
        b.state = rec.state;
        b.submitted_at = rec.submitted_at;
        b.finished_at = rec.finished_at.value_or(options_.clock());
        repo_.index_bundle(b);
    } catch (const Error& err) {
        std::fprintf(stderr, "exas: archiving %s failed: %s\n", rec.experiment_id.c_str(), err.what());
    }
    std::lock_guard lock(mutex_);
    push_event_locked(e, "state", std::string(to_string(e.record.state)));
    e.events.back().verdict = e.record.verdict;
    e.finalized = true;
    cv_.notify_all();
}

Scheduler::Entry& Scheduler::entry_locked(const std::string& id) const {
    auto it = entries_.find(id);
    if (it == entries_.end()) throw UnknownExperiment(id);
    return *it->second;
}

CancelAck Scheduler::cancel(const std::string& experiment_id) {
    std::unique_lock lock(mutex_);
    Entry& e = entry_locked(experiment_id);
    if (is_terminal(e.record.state)) return {experiment_id, e.record.state, true};
    if (e.record.state == ExperimentState::queued) {
        queue_.erase(std::remove(queue_.begin(), queue_.end(), experiment_id), queue_.end());
        transition_locked(e, {EventKind::cancel, "queued", ""});
        Driver& driver = drivers_.for_modality(e.record.descriptor.modality);
        lock.unlock();
        teardown(e, driver);
        finalize(e);
        lock.lock();
        return {experiment_id, e.record.state, false};
    }
    e.worker.request_stop();
    return {experiment_id, e.record.state, false};
}

std::vector<CancelAck> Scheduler::cancel_request(const std::string& request_id) {
    std::vector<std::string> ids;
    {
        std::lock_guard lock(mutex_);
        auto it = requests_.find(request_id);
        if (it == requests_.end()) throw UnknownExperiment(request_id);
        ids = it->second.experiment_ids;
    }
    std::vector<CancelAck> acks;
    for (const auto& id : ids) acks.push_back(cancel(id));
    return acks;
}

ExperimentRecord Scheduler::snapshot(const std::string& experiment_id) const {
    std::lock_guard lock(mutex_);
    return entry_locked(experiment_id).record;
}

std::optional<ExperimentRecord> Scheduler::find(const std::string& experiment_id) const {
    std::lock_guard lock(mutex_);
    auto it = entries_.find(experiment_id);
    if (it == entries_.end()) return std::nullopt;
    return it->second->record;
}

std::vector<ExperimentRecord> Scheduler::snapshots() const {
    std::lock_guard lock(mutex_);
    std::vector<ExperimentRecord> out;
    for (const auto& [_, e] : entries_) out.push_back(e->record);
    return out;
}

bool Scheduler::request_terminal_locked(const Request& r) const {
    return std::all_of(r.experiment_ids.begin(), r.experiment_ids.end(),
                       [&](const std::string& id) { return entries_.at(id)->finalized; });
}

RequestStatus Scheduler::request_status_locked(const std::string& id, const Request& r) const {
    RequestStatus s;
    s.request_id = id;
    s.plan = r.plan;
    s.submitted_at = r.submitted_at;
    std::vector<std::string> labels;
    for (const auto& eid : r.experiment_ids) {
        const auto& e = *entries_.at(eid);
        s.experiments.push_back(e.record);
        labels.push_back(e.run_label);
    }
    s.terminal = request_terminal_locked(r);
    if (s.terminal) s.verdict = combine_verdicts(r.plan.kpi, s.experiments, labels);
    return s;
}

std::optional<RequestStatus> Scheduler::request_status(const std::string& request_id) const {
    std::lock_guard lock(mutex_);
    auto it = requests_.find(request_id);
    if (it == requests_.end()) return std::nullopt;
    return request_status_locked(request_id, it->second);
}

bool Scheduler::wait_terminal(const std::string& experiment_id, std::chrono::milliseconds timeout) const {
    std::unique_lock lock(mutex_);
    const Entry& e = entry_locked(experiment_id);
    return cv_.wait_for(lock, timeout, [&] { return e.finalized; });
}

bool Scheduler::wait_request(const std::string& request_id, std::chrono::milliseconds timeout) const {
    std::unique_lock lock(mutex_);
    auto it = requests_.find(request_id);
    if (it == requests_.end()) throw UnknownExperiment(request_id);
    return cv_.wait_for(lock, timeout, [&] { return request_terminal_locked(it->second); });
}

bool Scheduler::wait_idle(std::chrono::milliseconds timeout) const {
    std::unique_lock lock(mutex_);
    return cv_.wait_for(lock, timeout, [&] {
        return std::all_of(entries_.begin(), entries_.end(), [](const auto& kv) { return kv.second->finalized; });
    });
}

EventBatch Scheduler::events_since(const std::string& experiment_id, std::size_t from,
                                   std::chrono::milliseconds timeout) const {
    std::unique_lock lock(mutex_);
    const Entry& e = entry_locked(experiment_id);
    cv_.wait_for(lock, timeout, [&] { return e.events.size() > from || e.finalized; });
    EventBatch batch;
    if (from < e.events.size()) batch.events.assign(e.events.begin() + static_cast<std::ptrdiff_t>(from), e.events.end());
    batch.closed = e.finalized;
    return batch;
}

ChannelState Scheduler::set_attenuation(const std::string& experiment_id, double value_db) {
    std::shared_ptr<DriverHandle> handle;
    {
        std::lock_guard lock(mutex_);
        const Entry& e = entry_locked(experiment_id);
        if (driver_kind_for(e.record.descriptor.modality) != DriverKind::sim_ota) {
            throw StateError("attenuation applies to sim-ota experiments only");
        }
        if (e.record.state != ExperimentState::running || !e.handle) {
            throw StateError("experiment is " + std::string(to_string(e.record.state)) + ", not running");
        }
        handle = e.handle;
    }
    ChannelState channel;
    try {
        channel = drivers_.ota().set_attenuation(*handle, value_db);
    } catch (const HandleTornDown&) {
        throw StateError("experiment is no longer running");
    }
    std::lock_guard lock(mutex_);
    Entry& e = entry_locked(experiment_id);
    char buf[64];
    std::snprintf(buf, sizeof buf, "attenuation set to %g dB", value_db);
    e.record.log.push_back({options_.clock(), "attenuation", buf});
    push_event_locked(e, "attenuation", buf);
    cv_.notify_all();
    return channel;
}

void Scheduler::shutdown() {
    {
        std::lock_guard lock(mutex_);
        if (stopping_) return;
        stopping_ = true;
        cv_.notify_all();
    }
    if (dispatcher_.joinable()) {
        dispatcher_.request_stop();
        dispatcher_.join();
    }
    std::vector<std::string> queued;
    std::vector<Entry*> all;
    {
        std::lock_guard lock(mutex_);
        queued.assign(queue_.begin(), queue_.end());
        for (auto& [_, e] : entries_) all.push_back(e.get());
    }
    for (const auto& id : queued) cancel(id);
    for (auto* e : all) {
        if (e->worker.joinable()) e->worker.request_stop();
    }
    for (auto* e : all) {
        if (e->worker.joinable()) e->worker.join();
    }
}

}  // namespace exas
