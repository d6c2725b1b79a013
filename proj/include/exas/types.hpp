#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace exas {

enum class Modality { simulation, emulation, in_lab, outdoors };

std::string_view to_string(Modality m) noexcept;
std::optional<Modality> modality_from_string(std::string_view s) noexcept;

enum class TrafficKind { tcp, udp };

std::string_view to_string(TrafficKind t) noexcept;
std::optional<TrafficKind> traffic_from_string(std::string_view s) noexcept;

// Countable infrastructure: compute cores, vGPUs, storage and anechoic
// chambers. Comparison is componentwise, so two vectors may be unordered.
struct ResourceVector {
    std::int64_t cpu_cores = 0;
    std::int64_t vgpus = 0;
    std::int64_t storage_gb = 0;
    std::int64_t chambers = 0;

    static constexpr std::array<std::string_view, 4> axis_names{"cpu_cores", "vgpus", "storage_gb", "chambers"};

    constexpr std::array<std::int64_t, 4> axes() const noexcept { return {cpu_cores, vgpus, storage_gb, chambers}; }

    constexpr ResourceVector& operator+=(const ResourceVector& o) noexcept {
        cpu_cores += o.cpu_cores;
        vgpus += o.vgpus;
        storage_gb += o.storage_gb;
        chambers += o.chambers;
        return *this;
    }
    constexpr ResourceVector& operator-=(const ResourceVector& o) noexcept {
        cpu_cores -= o.cpu_cores;
        vgpus -= o.vgpus;
        storage_gb -= o.storage_gb;
        chambers -= o.chambers;
        return *this;
    }
    friend constexpr ResourceVector operator+(ResourceVector a, const ResourceVector& b) noexcept { return a += b; }
    friend constexpr ResourceVector operator-(ResourceVector a, const ResourceVector& b) noexcept { return a -= b; }
    friend constexpr ResourceVector operator*(ResourceVector a, std::int64_t k) noexcept {
        a.cpu_cores *= k;
        a.vgpus *= k;
        a.storage_gb *= k;
        a.chambers *= k;
        return a;
    }
    friend constexpr bool operator==(const ResourceVector&, const ResourceVector&) = default;

    // Componentwise a <= b.
    constexpr bool fits_within(const ResourceVector& bound) const noexcept {
        const auto a = axes();
        const auto b = bound.axes();
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (a[i] > b[i]) return false;
        }
        return true;
    }

    // First axis on which this exceeds bound, if any.
    std::optional<std::string_view> first_exceeding_axis(const ResourceVector& bound) const noexcept;

    constexpr bool non_negative() const noexcept {
        for (auto v : axes()) {
            if (v < 0) return false;
        }
        return true;
    }
    constexpr bool any_positive() const noexcept {
        for (auto v : axes()) {
            if (v > 0) return true;
        }
        return false;
    }

    std::string to_string() const;
};

void to_json(nlohmann::json& j, const ResourceVector& r);
void from_json(const nlohmann::json& j, ResourceVector& r);

}  // namespace exas
