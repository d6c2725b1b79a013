#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "exas/types.hpp"

namespace exas {

// Synthetic performance profile of one installed 5G core. The numbers are
// fixture values; real cores are not part of this build.
struct CoreProfile {
    std::string core_name;
    std::string version;
    double tcp_mean_mbps = 60.0;
    double udp_mean_mbps = 70.0;
    double jitter_std_mbps = 4.0;
    std::int64_t provision_delay_ms = 30000;
    double latency_mean_ms = 12.0;
};

struct OtaChannelDefaults {
    double bandwidth_mhz = 100.0;
    double snr0_db = 30.0;
    double attenuation_db = 0.0;
    std::int64_t mimo_layers = 1;
    double jitter_std_mbps = 2.0;
};

// Installed cores, applications and template defaults.
struct Catalog {
    std::map<std::string, CoreProfile> cores;
    std::map<std::string, std::string> apps;  // name -> version
    std::string emulator_name = "UERANSIM";
    std::string emulator_version = "3.2.6";
    std::string orchestrator_version = "0.1.0";
    OtaChannelDefaults ota;

    // Case- and punctuation-insensitive lookup ("oai cn" finds "OAI-CN").
    const CoreProfile* find_core(std::string_view name) const;
    std::optional<std::string> find_app(std::string_view name) const;
    std::string core_list() const;
    std::string app_list() const;

    static Catalog defaults();
};

struct PlanDefaults {
    int duration_s = 120;
    int interval_s = 1;
    std::vector<TrafficKind> traffic{TrafficKind::tcp, TrafficKind::udp};
    std::uint64_t seed = 1;
    std::map<Modality, ResourceVector> per_run_resources{
        {Modality::simulation, {8, 0, 20, 0}},
        {Modality::emulation, {8, 0, 20, 0}},
        {Modality::in_lab, {8, 0, 20, 2}},
        {Modality::outdoors, {8, 0, 20, 0}},
    };

    ResourceVector per_run_for(Modality m) const;
};

struct Policy {
    int max_concurrent_experiments = 16;
    int max_runs_per_request = 256;
    std::set<Modality> allowed_modalities{Modality::emulation, Modality::in_lab};
    ResourceVector per_run_resource_cap{64, 8, 10000, 2};
};

// Lowercase with everything but [a-z0-9] removed.
std::string normalize_name(std::string_view s);

}  // namespace exas
