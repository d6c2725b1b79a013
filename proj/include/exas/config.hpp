#pragma once

#include <chrono>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "exas/catalog.hpp"
#include "exas/drivers.hpp"
#include "exas/types.hpp"

namespace exas {

// Service configuration. Every field has a default, so `{}` is a valid file.
struct ServiceConfig {
    std::string listen_host = "127.0.0.1";
    int listen_port = 8686;
    double time_scale = 60.0;
    std::string repository_path = "exas-repo";
    std::string pool_id = "lab";
    ResourceVector pool_capacity{3000, 30, 500000, 4};
    int max_concurrent_experiments = 16;
    std::chrono::seconds clarification_ttl{900};
    Policy policy;
    Catalog catalog = Catalog::defaults();
    PlanDefaults defaults;
    DriverOptions drivers;  // time_scale is copied in from the field above
};

ServiceConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ServiceConfig& c);

// Reads `path`, or $EXAS_CONFIG when it is set. An empty path and no
// variable gives the defaults. Throws ValidationError.
ServiceConfig load_config(const std::string& path = {});

}  // namespace exas
