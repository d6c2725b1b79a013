#include "exas/drivers.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "exas/errors.hpp"

namespace exas {

std::string_view to_string(DriverKind k) noexcept {
    switch (k) {
        case DriverKind::emulated_core: return "emulated-core";
        case DriverKind::sim_ota: return "sim-ota";
        case DriverKind::stub: return "stub";
    }
    return "unknown";
}

DriverKind driver_kind_for(Modality m) noexcept {
    switch (m) {
        case Modality::emulation: return DriverKind::emulated_core;
        case Modality::in_lab: return DriverKind::sim_ota;
        case Modality::simulation:
        case Modality::outdoors: return DriverKind::stub;
    }
    return DriverKind::stub;
}

double channel_throughput(const ChannelState& c) {
    const double snr = std::pow(10.0, (c.snr0_db - c.attenuation_db) / 10.0);
    return static_cast<double>(c.mimo_layers) * c.bandwidth_mhz * std::log2(1.0 + snr);
}

double SampleRng::uniform() {
    // 53 random bits, shifted off zero.
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double SampleRng::normal(double mean, double std) {
    const double u1 = uniform();
    const double u2 = uniform();
    const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    return mean + std * z;
}

double SampleRng::truncated_normal(double mean, double std) {
    if (std <= 0.0) return std::max(mean, 0.0);
    for (int attempt = 0; attempt < 64; ++attempt) {
        const double x = normal(mean, std);
        if (x >= 0.0) return x;
    }
    return 0.0;
}

DriverHandle::DriverHandle(std::string handle_id, DriverKind kind, std::vector<TopologyNode> topology,
                           std::uint64_t seed)
  : handle_id_(std::move(handle_id)), kind_(kind), topology_(std::move(topology)), rng_(seed) {}

ChannelState DriverHandle::channel() const {
    std::lock_guard lock(mutex_);
    return channel_;
}

ChannelState Driver::set_attenuation(DriverHandle& handle, double) {
    throw WrongDriverKind("set_attenuation needs a sim-ota handle, got " + std::string(to_string(handle.kind())));
}

SimulatedDriver::SimulatedDriver(DriverOptions options) : options_(std::move(options)), clock_(options_.time_scale) {}

namespace {

double required_number(const ExperimentDescriptor& d, const char* key) {
    auto v = d.config_number(key);
    if (!v) throw ValidationError(std::string("descriptor configuration lacks ") + key);
    return *v;
}

ResourceVector demand_of(const ExperimentDescriptor& d) {
    auto get = [&](const char* key) { return static_cast<std::int64_t>(d.config_number(key).value_or(0)); };
    return {get("cpu_cores"), get("vgpus"), get("storage_gb"), get("chambers")};
}

std::vector<TopologyNode> provision_order(const std::vector<TopologyNode>& nodes) {
    std::vector<TopologyNode> ordered;
    for (auto role : {NodeRole::core, NodeRole::gnb, NodeRole::ue}) {
        for (const auto& n : nodes) {
            if (n.role == role) ordered.push_back(n);
        }
    }
    for (const auto& n : nodes) {
        if (n.role != NodeRole::core && n.role != NodeRole::gnb && n.role != NodeRole::ue) ordered.push_back(n);
    }
    return ordered;
}

}  // namespace

std::shared_ptr<DriverHandle> SimulatedDriver::instantiate(const ExperimentDescriptor& descriptor, const Lease& lease,
                                                           std::stop_token stop) {
    if (driver_kind_for(descriptor.modality) != kind()) {
        throw WrongDriverKind("descriptor modality " + std::string(to_string(descriptor.modality)) +
                              " does not match driver " + std::string(to_string(kind())));
    }
    if (auto axis = demand_of(descriptor).first_exceeding_axis(lease.amount)) {
        throw ProvisionFault("", "lease " + lease.lease_id + " does not cover descriptor demand on " + std::string(*axis));
    }
    const auto core = descriptor.core_implementation();
    const auto seed = static_cast<std::uint64_t>(descriptor.config_number("seed").value_or(0));

    std::int64_t created = 0;
    auto destroy_created = [&] { live_components_ -= created; };
    for (const auto& node : provision_order(descriptor.network_topology.nodes)) {
        if (stop.stop_requested()) {
            destroy_created();
            throw ProvisionFault(node.node_id, "cancelled during provisioning");
        }
        const bool faulty = std::any_of(options_.faults.begin(), options_.faults.end(), [&](const FaultInjection& f) {
            return f.role == node.role && (f.core.empty() || normalize_name(f.core) == normalize_name(core));
        });
        if (faulty) {
            destroy_created();
            throw ProvisionFault(node.node_id, "injected fault while instantiating " + std::string(to_string(node.role)) +
                                                   " (" + node.implementation + ")");
        }
        std::int64_t delay_ms = 0;
        if (node.role == NodeRole::core) {
            delay_ms = static_cast<std::int64_t>(descriptor.config_number("provision_delay_ms").value_or(0));
        } else if (auto it = options_.node_delay_ms.find(node.role); it != options_.node_delay_ms.end()) {
            delay_ms = it->second;
        }
        live_components_ += 1;
        ++created;
        if (!clock_.sleep_for(static_cast<double>(delay_ms) / 1000.0, stop)) {
            destroy_created();
            throw ProvisionFault(node.node_id, "cancelled during provisioning");
        }
    }
    provisions_ += 1;
    return std::make_shared<DriverHandle>(std::string(to_string(kind())) + "-" + std::to_string(next_handle_++), kind(),
                                          descriptor.network_topology.nodes, seed);
}

ThroughputTrace SimulatedDriver::run_measurement(DriverHandle& handle, TrafficKind traffic, int duration_s,
                                                 int interval_s, std::stop_token stop, const SampleSink& sink) {
    if (!handle.live()) throw HandleTornDown("handle " + handle.handle_id() + " is torn down");
    if (duration_s <= 0 || interval_s <= 0 || interval_s > duration_s) {
        throw ValidationError("measurement needs 0 < interval_s <= duration_s");
    }
    ThroughputTrace trace;
    trace.core_name = handle.core_name_;
    trace.traffic = traffic;
    trace.interval_s = interval_s;
    const int count = (duration_s + interval_s - 1) / interval_s;
    trace.samples.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        const double t = static_cast<double>(i) * interval_s;
        const double span = std::min<double>(interval_s, duration_s - t);
        if (!clock_.sleep_for(span, stop) || !handle.live()) {
            trace.truncated = true;
            break;
        }
        const Sample s = draw_sample(handle, traffic, t);
        trace.samples.push_back(s);
        if (sink) sink(s);
    }
    return trace;
}

void SimulatedDriver::teardown(DriverHandle& handle) {
    if (handle.live_.exchange(false)) {
        live_components_ -= static_cast<std::int64_t>(handle.topology().size());
        teardowns_ += 1;
    }
}

std::shared_ptr<DriverHandle> EmulatedCoreDriver::provision(const ExperimentDescriptor& descriptor, const Lease& lease,
                                                            std::stop_token stop) {
    const double tcp = required_number(descriptor, "profile_tcp_mean_mbps");
    const double udp = required_number(descriptor, "profile_udp_mean_mbps");
    const double jitter = required_number(descriptor, "profile_jitter_std_mbps");
    const double latency = descriptor.config_number("profile_latency_mean_ms").value_or(10.0);
    auto h = instantiate(descriptor, lease, stop);
    h->core_name_ = descriptor.core_implementation();
    h->tcp_mean_ = tcp;
    h->udp_mean_ = udp;
    h->jitter_std_ = jitter;
    h->latency_mean_ = latency;
    return h;
}

Sample EmulatedCoreDriver::draw_sample(DriverHandle& h, TrafficKind traffic, double t_offset) {
    std::lock_guard lock(h.mutex_);
    Sample s;
    s.t_offset_s = t_offset;
    s.mbps = h.rng_.truncated_normal(traffic == TrafficKind::tcp ? h.tcp_mean_ : h.udp_mean_, h.jitter_std_);
    s.latency_ms = h.rng_.truncated_normal(h.latency_mean_, 0.1 * h.latency_mean_);
    s.cpu_pct = std::clamp(h.rng_.normal(15.0 + 0.25 * s.mbps, 1.5), 0.0, 100.0);
    return s;
}

std::shared_ptr<DriverHandle> SimOtaDriver::provision(const ExperimentDescriptor& descriptor, const Lease& lease,
                                                      std::stop_token stop) {
    ChannelState c;
    c.bandwidth_mhz = required_number(descriptor, "bandwidth_mhz");
    c.snr0_db = required_number(descriptor, "snr0_db");
    c.attenuation_db = descriptor.config_number("attenuation_db").value_or(0.0);
    c.mimo_layers = static_cast<std::int64_t>(required_number(descriptor, "mimo_layers"));
    const double jitter = descriptor.config_number("ota_jitter_std_mbps").value_or(0.0);
    const double latency = descriptor.config_number("profile_latency_mean_ms").value_or(8.0);
    auto h = instantiate(descriptor, lease, stop);
    std::lock_guard lock(h->mutex_);
    h->core_name_ = descriptor.core_implementation();
    h->channel_ = c;
    h->jitter_std_ = jitter;
    h->latency_mean_ = latency;
    return h;
}

ChannelState SimOtaDriver::set_attenuation(DriverHandle& h, double value_db) {
    if (h.kind() != DriverKind::sim_ota) {
        throw WrongDriverKind("set_attenuation needs a sim-ota handle, got " + std::string(to_string(h.kind())));
    }
    if (!(value_db >= 0.0 && value_db <= 120.0)) {
        throw RangeError("attenuation must be within [0, 120] dB, got " + std::to_string(value_db));
    }
    if (!h.live()) throw HandleTornDown("handle " + h.handle_id() + " is torn down");
    std::lock_guard lock(h.mutex_);
    h.channel_.attenuation_db = value_db;
    return h.channel_;
}

Sample SimOtaDriver::draw_sample(DriverHandle& h, TrafficKind, double t_offset) {
    std::lock_guard lock(h.mutex_);
    const double capacity = channel_throughput(h.channel_);
    Sample s;
    s.t_offset_s = t_offset;
    s.mbps = h.rng_.truncated_normal(capacity, h.jitter_std_);
    // Queueing delay grows as the link degrades.
    s.latency_ms = h.rng_.truncated_normal(h.latency_mean_ + 100.0 / (1.0 + capacity), 0.05 * h.latency_mean_);
    s.cpu_pct = std::clamp(h.rng_.normal(10.0 + 0.02 * s.mbps, 1.0), 0.0, 100.0);
    return s;
}

std::shared_ptr<DriverHandle> StubDriver::provision(const ExperimentDescriptor& descriptor, const Lease&,
                                                    std::stop_token) {
    throw ProvisionFault("", "driver not implemented for modality " + std::string(to_string(descriptor.modality)));
}

ThroughputTrace StubDriver::run_measurement(DriverHandle& handle, TrafficKind, int, int, std::stop_token,
                                            const SampleSink&) {
    throw HandleTornDown("stub driver has no live handles (" + handle.handle_id() + ")");
}

void StubDriver::teardown(DriverHandle&) {}

DriverSet::DriverSet(const DriverOptions& options)
  : emulated_(std::make_unique<EmulatedCoreDriver>(options)),
    ota_(std::make_unique<SimOtaDriver>(options)),
    stub_(std::make_unique<StubDriver>()) {}

Driver& DriverSet::for_modality(Modality m) {
    switch (driver_kind_for(m)) {
        case DriverKind::emulated_core: return *emulated_;
        case DriverKind::sim_ota: return *ota_;
        case DriverKind::stub: return *stub_;
    }
    return *stub_;
}

std::int64_t DriverSet::provisions() const noexcept {
    return emulated_->provisions() + ota_->provisions();
}

std::int64_t DriverSet::teardowns() const noexcept {
    return emulated_->teardowns() + ota_->teardowns();
}

std::int64_t DriverSet::live_components() const noexcept {
    return emulated_->live_components() + ota_->live_components();
}

}  // namespace exas
