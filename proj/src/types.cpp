#include "exas/types.hpp"

#include "exas/errors.hpp"

namespace exas {

std::string_view to_string(Modality m) noexcept {
    switch (m) {
        case Modality::simulation: return "simulation";
        case Modality::emulation: return "emulation";
        case Modality::in_lab: return "in-lab";
        case Modality::outdoors: return "outdoors";
    }
    return "unknown";
}

std::optional<Modality> modality_from_string(std::string_view s) noexcept {
    if (s == "simulation") return Modality::simulation;
    if (s == "emulation") return Modality::emulation;
    if (s == "in-lab") return Modality::in_lab;
    if (s == "outdoors") return Modality::outdoors;
    return std::nullopt;
}

std::string_view to_string(TrafficKind t) noexcept {
    return t == TrafficKind::tcp ? "tcp" : "udp";
}

std::optional<TrafficKind> traffic_from_string(std::string_view s) noexcept {
    if (s == "tcp") return TrafficKind::tcp;
    if (s == "udp") return TrafficKind::udp;
    return std::nullopt;
}

std::optional<std::string_view> ResourceVector::first_exceeding_axis(const ResourceVector& bound) const noexcept {
    const auto a = axes();
    const auto b = bound.axes();
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] > b[i]) return axis_names[i];
    }
    return std::nullopt;
}

std::string ResourceVector::to_string() const {
    return "(" + std::to_string(cpu_cores) + "," + std::to_string(vgpus) + "," + std::to_string(storage_gb) + "," +
           std::to_string(chambers) + ")";
}

void to_json(nlohmann::json& j, const ResourceVector& r) {
    j = nlohmann::json{{"cpu_cores", r.cpu_cores},
                       {"vgpus", r.vgpus},
                       {"storage_gb", r.storage_gb},
                       {"chambers", r.chambers}};
}

void from_json(const nlohmann::json& j, ResourceVector& r) {
    if (!j.is_object()) throw ValidationError("resource vector must be an object");
    r.cpu_cores = j.value("cpu_cores", std::int64_t{0});
    r.vgpus = j.value("vgpus", std::int64_t{0});
    r.storage_gb = j.value("storage_gb", std::int64_t{0});
    r.chambers = j.value("chambers", std::int64_t{0});
    if (!r.non_negative()) throw ValidationError("resource vector has a negative axis: " + r.to_string());
}

}  // namespace exas
