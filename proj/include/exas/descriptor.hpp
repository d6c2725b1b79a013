#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "exas/time.hpp"
#include "exas/types.hpp"

namespace exas {

// Scalar configuration value. Integers and doubles stay distinct so that a
// descriptor re-parsed from disk produces the same canonical bytes.
using ConfigValue = std::variant<std::int64_t, double, bool, std::string>;
using ConfigMap = std::map<std::string, ConfigValue>;

std::optional<double> as_number(const ConfigValue& v) noexcept;
nlohmann::json config_value_to_json(const ConfigValue& v);
ConfigValue config_value_from_json(const nlohmann::json& j);

enum class NodeRole { ue, gnb, core, dnn, app_server, chamber };

std::string_view to_string(NodeRole r) noexcept;
std::optional<NodeRole> node_role_from_string(std::string_view s) noexcept;

struct TopologyNode {
    std::string node_id;
    NodeRole role = NodeRole::ue;
    std::string implementation;

    friend bool operator==(const TopologyNode&, const TopologyNode&) = default;
};

struct TopologyLink {
    std::string from;
    std::string to;
    std::string kind;

    friend bool operator==(const TopologyLink&, const TopologyLink&) = default;
};

struct NetworkTopology {
    std::vector<TopologyNode> nodes;
    std::vector<TopologyLink> links;
};

// Machine-readable record of one experiment. descriptor_id is derived from
// the other fields (see seal()), never supplied by a user.
struct ExperimentDescriptor {
    std::string descriptor_id;
    std::string schema_version = "1.0.0";
    std::map<std::string, std::string> software_versions;
    NetworkTopology network_topology;
    std::map<std::string, std::string> hardware_identifiers;
    ConfigMap configuration;
    Modality modality = Modality::emulation;
    Timestamp created_at{};

    std::optional<double> config_number(std::string_view key) const;
    std::optional<std::string> config_string(std::string_view key) const;
    const TopologyNode* first_node(NodeRole role) const;
    // Implementation name of the first core node, empty when there is none.
    std::string core_implementation() const;
};

struct Violation {
    std::string field_path;
    std::string message;
};

// Roles a descriptor of the given modality must contain at least once.
std::vector<NodeRole> required_roles(Modality m);

std::vector<Violation> validate(const ExperimentDescriptor& d);

// Key-sorted compact JSON of every field except descriptor_id.
std::string canonicalize(const ExperimentDescriptor& d);
nlohmann::json canonical_json(const ExperimentDescriptor& d);

std::string hash_descriptor(const ExperimentDescriptor& d);

// Returns d with descriptor_id set to its content hash.
ExperimentDescriptor seal(ExperimentDescriptor d);

// `.exac.json` file body: canonical form plus descriptor_id.
std::string serialize_descriptor(const ExperimentDescriptor& d);
// Parses a descriptor file body. A present descriptor_id must match the
// content hash.
ExperimentDescriptor parse_descriptor(std::string_view text);
ExperimentDescriptor descriptor_from_json(const nlohmann::json& j);

struct DiffEntry {
    std::string path;
    nlohmann::json old_value;
    nlohmann::json new_value;
};

struct DescriptorDiff {
    std::vector<DiffEntry> changed;
    std::vector<std::string> added;
    std::vector<std::string> removed;

    bool empty() const noexcept { return changed.empty() && added.empty() && removed.empty(); }
};

DescriptorDiff diff_descriptors(const ExperimentDescriptor& a, const ExperimentDescriptor& b);

}  // namespace exas
