#include "exas/catalog.hpp"

#include <cctype>

namespace exas {

std::string normalize_name(std::string_view s) {
    std::string out;
    for (unsigned char c : s) {
        if (std::isalnum(c)) out.push_back(static_cast<char>(std::tolower(c)));
    }
    return out;
}

const CoreProfile* Catalog::find_core(std::string_view name) const {
    const auto key = normalize_name(name);
    if (key.empty()) return nullptr;
    for (const auto& [n, p] : cores) {
        if (normalize_name(n) == key) return &p;
    }
    return nullptr;
}

std::optional<std::string> Catalog::find_app(std::string_view name) const {
    const auto key = normalize_name(name);
    if (key.empty()) return std::nullopt;
    for (const auto& [n, _] : apps) {
        if (normalize_name(n) == key) return n;
    }
    return std::nullopt;
}

std::string Catalog::core_list() const {
    std::string out;
    for (const auto& [n, _] : cores) out += (out.empty() ? "" : ", ") + n;
    return out;
}

std::string Catalog::app_list() const {
    std::string out;
    for (const auto& [n, _] : apps) out += (out.empty() ? "" : ", ") + n;
    return out;
}

Catalog Catalog::defaults() {
    Catalog c;
    c.cores["Open5GS"] = {"Open5GS", "2.7.1", 60.0, 68.0, 4.0, 30000, 11.0};
    c.cores["Free5GC"] = {"Free5GC", "3.4.2", 70.0, 75.0, 4.0, 35000, 12.5};
    c.cores["OAI-CN"] = {"OAI-CN", "2.0.1", 65.0, 72.0, 4.0, 40000, 13.0};
    c.cores["Cumucore"] = {"Cumucore", "5.1.0", 80.0, 86.0, 3.0, 25000, 9.5};
    c.apps["iperf3"] = "3.16";
    return c;
}

ResourceVector PlanDefaults::per_run_for(Modality m) const {
    auto it = per_run_resources.find(m);
    return it == per_run_resources.end() ? ResourceVector{8, 0, 20, 0} : it->second;
}

}  // namespace exas
