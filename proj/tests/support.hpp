#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <unistd.h>

#include "exas/config.hpp"
#include "exas/drivers.hpp"
#include "exas/orchestrator.hpp"
#include "exas/pool.hpp"
#include "exas/repository.hpp"
#include "exas/scheduler.hpp"

namespace exas::fixture {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
  public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("exas-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

  private:
    std::filesystem::path path_;
};

inline ServiceConfig fast_config(double time_scale = 20000.0) {
    ServiceConfig c;
    c.time_scale = time_scale;
    c.drivers.time_scale = time_scale;
    return c;
}

// Service wiring with an aggressive time scale so a two minute run takes
// a few milliseconds.
struct Stack {
    explicit Stack(ServiceConfig cfg = fixture::fast_config(), TempDir* dir = nullptr)
      : config(std::move(cfg)),
        owned_dir(dir ? nullptr : std::make_unique<TempDir>()),
        repo((dir ? dir : owned_dir.get())->path() / "repo"),
        pool(config.pool_id, config.pool_capacity),
        drivers(config.drivers),
        scheduler(pool, drivers, repo, {config.max_concurrent_experiments, utc_now}),
        tokens(config.clarification_ttl),
        api(config, scheduler, repo, tokens) {}

    static ServiceConfig fast_config(double time_scale = 20000.0) { return fixture::fast_config(time_scale); }

    ServiceConfig config;
    std::unique_ptr<TempDir> owned_dir;
    Repository repo;
    ResourcePool pool;
    DriverSet drivers;
    Scheduler scheduler;
    ClarificationStore tokens;
    Orchestrator api;
};

inline ExperimentPlan paper_plan() {
    ExperimentPlan p;
    p.app_under_test = "iperf3";
    p.target_cores = {"Open5GS", "Free5GC", "OAI-CN"};
    p.kpi.metric = KpiMetric::mean_throughput;
    p.kpi.comparator = Comparator::exceeds;
    p.kpi.threshold = 50.0;
    p.kpi.unit = Unit::mbps;
    p.modality = Modality::emulation;
    p.duration_s = 120;
    p.interval_s = 1;
    p.per_run_resources = {8, 0, 20, 0};
    return p;
}

inline constexpr const char* paper_request =
    "Deploy iperf3 across three 5G cores (Open5GS, Free5GC, OAI-CN) and verify mean throughput exceeds 50 Mbps "
    "for test approval.";

}  // namespace exas::fixture
