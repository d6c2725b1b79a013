#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <stop_token>
#include <string>
#include <vector>

#include "exas/descriptor.hpp"
#include "exas/pool.hpp"
#include "exas/telemetry.hpp"
#include "exas/time.hpp"

namespace exas {

enum class DriverKind { emulated_core, sim_ota, stub };

std::string_view to_string(DriverKind k) noexcept;
DriverKind driver_kind_for(Modality m) noexcept;

struct ChannelState {
    double bandwidth_mhz = 100.0;
    double snr0_db = 30.0;
    double attenuation_db = 0.0;
    std::int64_t mimo_layers = 1;
};

// Shannon capacity of a single link with MIMO as a linear multiplier:
//   layers * bandwidth_MHz * log2(1 + 10^((snr0 - attenuation) / 10))  [Mbps]
double channel_throughput(const ChannelState& c);

// Gaussian draws built directly on mt19937_64 so traces are reproducible
// across standard library implementations.
class SampleRng {
  public:
    explicit SampleRng(std::uint64_t seed) : engine_(seed) {}

    double uniform();  // (0, 1)
    double normal(double mean, double std);
    // Normal truncated at zero by rejection.
    double truncated_normal(double mean, double std);

  private:
    std::mt19937_64 engine_;
};

// A provisioned set of simulated components. Valid from provision until
// teardown; measurement after teardown throws HandleTornDown.
class DriverHandle {
  public:
    DriverHandle(std::string handle_id, DriverKind kind, std::vector<TopologyNode> topology, std::uint64_t seed);

    const std::string& handle_id() const noexcept { return handle_id_; }
    DriverKind kind() const noexcept { return kind_; }
    const std::vector<TopologyNode>& topology() const noexcept { return topology_; }
    bool live() const noexcept { return live_.load(); }

    ChannelState channel() const;

  private:
    friend class SimulatedDriver;
    friend class EmulatedCoreDriver;
    friend class SimOtaDriver;

    std::string handle_id_;
    DriverKind kind_;
    std::vector<TopologyNode> topology_;
    std::atomic<bool> live_{true};
    mutable std::mutex mutex_;
    ChannelState channel_;
    SampleRng rng_;
    // Measurement profile copied from the descriptor at provision time.
    std::string core_name_;
    double tcp_mean_ = 0.0;
    double udp_mean_ = 0.0;
    double jitter_std_ = 0.0;
    double latency_mean_ = 10.0;
};

using SampleSink = std::function<void(const Sample&)>;

struct FaultInjection {
    std::string core;  // empty matches every core
    NodeRole role = NodeRole::gnb;
};

struct DriverOptions {
    double time_scale = 60.0;
    // Simulated instantiation delay per role; the core's delay comes from
    // the descriptor (provision_delay_ms).
    std::map<NodeRole, std::int64_t> node_delay_ms{{NodeRole::gnb, 10000}, {NodeRole::ue, 5000},
                                                   {NodeRole::dnn, 15000}, {NodeRole::app_server, 5000},
                                                   {NodeRole::chamber, 5000}};
    std::vector<FaultInjection> faults;
};

class Driver {
  public:
    virtual ~Driver() = default;

    virtual DriverKind kind() const noexcept = 0;

    // Instantiates core, gNB, UE, then the remaining nodes. Throws
    // ProvisionFault after destroying anything it created.
    virtual std::shared_ptr<DriverHandle> provision(const ExperimentDescriptor& descriptor, const Lease& lease,
                                                    std::stop_token stop = {}) = 0;

    // Returns ceil(duration/interval) samples, or a truncated prefix when
    // stop is requested.
    virtual ThroughputTrace run_measurement(DriverHandle& handle, TrafficKind traffic, int duration_s, int interval_s,
                                            std::stop_token stop = {}, const SampleSink& sink = {}) = 0;

    virtual ChannelState set_attenuation(DriverHandle& handle, double value_db);

    // Idempotent.
    virtual void teardown(DriverHandle& handle) = 0;
};

// Bookkeeping shared by the simulated drivers: provision/teardown counters
// and the number of live simulated components.
class SimulatedDriver : public Driver {
  public:
    explicit SimulatedDriver(DriverOptions options);

    ThroughputTrace run_measurement(DriverHandle& handle, TrafficKind traffic, int duration_s, int interval_s,
                                    std::stop_token stop = {}, const SampleSink& sink = {}) override;
    void teardown(DriverHandle& handle) override;

    std::int64_t provisions() const noexcept { return provisions_.load(); }
    std::int64_t teardowns() const noexcept { return teardowns_.load(); }
    std::int64_t live_components() const noexcept { return live_components_.load(); }

    const SimClock& clock() const noexcept { return clock_; }

  protected:
    std::shared_ptr<DriverHandle> instantiate(const ExperimentDescriptor& descriptor, const Lease& lease,
                                              std::stop_token stop);
    virtual Sample draw_sample(DriverHandle& handle, TrafficKind traffic, double t_offset) = 0;

    DriverOptions options_;
    SimClock clock_;

  private:
    std::atomic<std::int64_t> provisions_{0};
    std::atomic<std::int64_t> teardowns_{0};
    std::atomic<std::int64_t> live_components_{0};
    std::atomic<std::uint64_t> next_handle_{1};
};

// iperf-style synthetic benchmark against an emulated UE/gNB/core/DNN chain.
class EmulatedCoreDriver final : public SimulatedDriver {
  public:
    using SimulatedDriver::SimulatedDriver;

    DriverKind kind() const noexcept override { return DriverKind::emulated_core; }
    std::shared_ptr<DriverHandle> provision(const ExperimentDescriptor& descriptor, const Lease& lease,
                                            std::stop_token stop = {}) override;

  protected:
    Sample draw_sample(DriverHandle& handle, TrafficKind traffic, double t_offset) override;
};

// Over-the-air link between two anechoic chambers with programmable
// attenuation. Each sample reads the channel once.
class SimOtaDriver final : public SimulatedDriver {
  public:
    using SimulatedDriver::SimulatedDriver;

    DriverKind kind() const noexcept override { return DriverKind::sim_ota; }
    std::shared_ptr<DriverHandle> provision(const ExperimentDescriptor& descriptor, const Lease& lease,
                                            std::stop_token stop = {}) override;
    ChannelState set_attenuation(DriverHandle& handle, double value_db) override;

  protected:
    Sample draw_sample(DriverHandle& handle, TrafficKind traffic, double t_offset) override;
};

// Simulation and outdoor modalities have no driver yet.
class StubDriver final : public Driver {
  public:
    DriverKind kind() const noexcept override { return DriverKind::stub; }
    std::shared_ptr<DriverHandle> provision(const ExperimentDescriptor& descriptor, const Lease& lease,
                                            std::stop_token stop = {}) override;
    ThroughputTrace run_measurement(DriverHandle& handle, TrafficKind traffic, int duration_s, int interval_s,
                                    std::stop_token stop = {}, const SampleSink& sink = {}) override;
    void teardown(DriverHandle& handle) override;
};

// One driver per kind, picked by descriptor modality.
class DriverSet {
  public:
    explicit DriverSet(const DriverOptions& options);

    Driver& for_modality(Modality m);
    EmulatedCoreDriver& emulated() noexcept { return *emulated_; }
    SimOtaDriver& ota() noexcept { return *ota_; }

    std::int64_t provisions() const noexcept;
    std::int64_t teardowns() const noexcept;
    std::int64_t live_components() const noexcept;

  private:
    std::unique_ptr<EmulatedCoreDriver> emulated_;
    std::unique_ptr<SimOtaDriver> ota_;
    std::unique_ptr<StubDriver> stub_;
};

}  // namespace exas
