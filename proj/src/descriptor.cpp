#include "exas/descriptor.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <set>
#include <tuple>

#include "exas/errors.hpp"
#include "exas/hash.hpp"

namespace exas {

using nlohmann::json;

std::optional<double> as_number(const ConfigValue& v) noexcept {
    if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
    if (const auto* d = std::get_if<double>(&v)) return *d;
    return std::nullopt;
}

json config_value_to_json(const ConfigValue& v) {
    return std::visit([](const auto& x) { return json(x); }, v);
}

ConfigValue config_value_from_json(const json& j) {
    if (j.is_boolean()) return j.get<bool>();
    if (j.is_number_integer()) return j.get<std::int64_t>();
    if (j.is_number_float()) return j.get<double>();
    if (j.is_string()) return j.get<std::string>();
    throw ValidationError("configuration values must be scalars, got: " + j.dump());
}

std::string_view to_string(NodeRole r) noexcept {
    switch (r) {
        case NodeRole::ue: return "ue";
        case NodeRole::gnb: return "gnb";
        case NodeRole::core: return "core";
        case NodeRole::dnn: return "dnn";
        case NodeRole::app_server: return "app-server";
        case NodeRole::chamber: return "chamber";
    }
    return "unknown";
}

std::optional<NodeRole> node_role_from_string(std::string_view s) noexcept {
    if (s == "ue") return NodeRole::ue;
    if (s == "gnb") return NodeRole::gnb;
    if (s == "core") return NodeRole::core;
    if (s == "dnn") return NodeRole::dnn;
    if (s == "app-server") return NodeRole::app_server;
    if (s == "chamber") return NodeRole::chamber;
    return std::nullopt;
}

std::optional<double> ExperimentDescriptor::config_number(std::string_view key) const {
    auto it = configuration.find(std::string(key));
    if (it == configuration.end()) return std::nullopt;
    return as_number(it->second);
}

std::optional<std::string> ExperimentDescriptor::config_string(std::string_view key) const {
    auto it = configuration.find(std::string(key));
    if (it == configuration.end()) return std::nullopt;
    if (const auto* s = std::get_if<std::string>(&it->second)) return *s;
    return std::nullopt;
}

const TopologyNode* ExperimentDescriptor::first_node(NodeRole role) const {
    for (const auto& n : network_topology.nodes) {
        if (n.role == role) return &n;
    }
    return nullptr;
}

std::string ExperimentDescriptor::core_implementation() const {
    const auto* n = first_node(NodeRole::core);
    return n ? n->implementation : std::string{};
}

std::vector<NodeRole> required_roles(Modality m) {
    switch (m) {
        case Modality::emulation: return {NodeRole::ue, NodeRole::gnb, NodeRole::core, NodeRole::dnn};
        case Modality::in_lab: return {NodeRole::ue, NodeRole::gnb, NodeRole::core, NodeRole::chamber};
        case Modality::simulation:
        case Modality::outdoors: return {NodeRole::ue, NodeRole::gnb, NodeRole::core};
    }
    return {};
}

namespace {

bool valid_utf8(std::string_view s) {
    try {
        (void)json(std::string(s)).dump();
        return true;
    } catch (const json::type_error&) {
        return false;
    }
}

json canonical_json_unchecked(const ExperimentDescriptor& d) {
    json config = json::object();
    for (const auto& [k, v] : d.configuration) config[k] = config_value_to_json(v);

    std::vector<TopologyNode> nodes = d.network_topology.nodes;
    std::sort(nodes.begin(), nodes.end(),
              [](const TopologyNode& a, const TopologyNode& b) { return a.node_id < b.node_id; });
    std::vector<TopologyLink> links = d.network_topology.links;
    std::sort(links.begin(), links.end(), [](const TopologyLink& a, const TopologyLink& b) {
        return std::tie(a.from, a.to, a.kind) < std::tie(b.from, b.to, b.kind);
    });

    json jnodes = json::array();
    for (const auto& n : nodes) {
        jnodes.push_back({{"node_id", n.node_id}, {"role", to_string(n.role)}, {"implementation", n.implementation}});
    }
    json jlinks = json::array();
    for (const auto& l : links) jlinks.push_back({{"from", l.from}, {"to", l.to}, {"kind", l.kind}});

    return json{{"schema_version", d.schema_version},
                {"software_versions", d.software_versions},
                {"network_topology", {{"nodes", jnodes}, {"links", jlinks}}},
                {"hardware_identifiers", d.hardware_identifiers},
                {"configuration", config},
                {"modality", to_string(d.modality)},
                {"created_at", format_rfc3339(d.created_at)}};
}

std::string dump_canonical(const json& j) {
    try {
        return j.dump();
    } catch (const json::type_error& e) {
        throw ValidationError(std::string("descriptor is not valid UTF-8: ") + e.what());
    }
}

std::string join_violations(const std::vector<Violation>& v) {
    std::string out = "invalid descriptor:";
    for (const auto& x : v) out += " [" + x.field_path + ": " + x.message + "]";
    return out;
}

void require_valid(const ExperimentDescriptor& d) {
    auto v = validate(d);
    if (!v.empty()) throw ValidationError(join_violations(v));
}

}  // namespace

std::vector<Violation> validate(const ExperimentDescriptor& d) {
    std::vector<Violation> out;
    auto add = [&](std::string path, std::string msg) { out.push_back({std::move(path), std::move(msg)}); };

    static const std::regex semver(R"(\d+\.\d+\.\d+)");
    if (!std::regex_match(d.schema_version, semver)) add("schema_version", "must be a semantic version MAJOR.MINOR.PATCH");

    for (const auto& [k, v] : d.software_versions) {
        if (k.empty()) add("software_versions", "component name must be nonempty");
        if (v.empty()) add("software_versions." + k, "version must be nonempty");
    }
    for (const auto& [k, v] : d.hardware_identifiers) {
        if (k.empty()) add("hardware_identifiers", "role must be nonempty");
        if (v.empty()) add("hardware_identifiers." + k, "identifier must be nonempty");
    }

    std::set<std::string> ids;
    for (std::size_t i = 0; i < d.network_topology.nodes.size(); ++i) {
        const auto& n = d.network_topology.nodes[i];
        const auto path = "network_topology.nodes[" + std::to_string(i) + "]";
        if (n.node_id.empty()) {
            add(path + ".node_id", "must be nonempty");
        } else if (!ids.insert(n.node_id).second) {
            add(path + ".node_id", "duplicate node_id " + n.node_id);
        }
        if (n.implementation.empty()) add(path + ".implementation", "must be nonempty");
    }
    for (std::size_t i = 0; i < d.network_topology.links.size(); ++i) {
        const auto& l = d.network_topology.links[i];
        const auto path = "network_topology.links[" + std::to_string(i) + "]";
        if (!ids.contains(l.from)) add(path + ".from", "unknown node " + l.from);
        if (!ids.contains(l.to)) add(path + ".to", "unknown node " + l.to);
        if (l.kind.empty()) add(path + ".kind", "must be nonempty");
    }
    std::vector<std::string> missing;
    for (auto role : required_roles(d.modality)) {
        if (!d.first_node(role)) missing.emplace_back(to_string(role));
    }
    if (!missing.empty()) {
        std::string msg = "missing required role(s) for " + std::string(to_string(d.modality)) + ":";
        for (const auto& r : missing) msg += " " + r;
        add("network_topology", msg);
    }

    for (const auto& [k, v] : d.configuration) {
        if (k.empty()) add("configuration", "parameter name must be nonempty");
        if (const auto* x = std::get_if<double>(&v); x && !std::isfinite(*x)) {
            add("configuration." + k, "must be finite");
        }
    }
    const auto duration = d.config_number("duration_s");
    const auto interval = d.config_number("interval_s");
    if (!duration) {
        add("configuration.duration_s", "required numeric parameter is missing");
    } else if (!(*duration > 0)) {
        add("configuration.duration_s", "must be > 0");
    }
    if (!interval) {
        add("configuration.interval_s", "required numeric parameter is missing");
    } else if (!(*interval > 0)) {
        add("configuration.interval_s", "must be > 0");
    } else if (duration && *duration > 0 && *interval > *duration) {
        add("configuration.interval_s", "must not exceed duration_s");
    }
    if (d.configuration.contains("attenuation_db")) {
        const auto a = d.config_number("attenuation_db");
        if (!a || *a < 0 || *a > 120) add("configuration.attenuation_db", "must be a number in [0, 120]");
    }
    if (d.configuration.contains("bandwidth_mhz")) {
        const auto b = d.config_number("bandwidth_mhz");
        if (!b || !(*b > 0)) add("configuration.bandwidth_mhz", "must be > 0");
    }
    if (d.configuration.contains("mimo_layers")) {
        const auto& v = d.configuration.at("mimo_layers");
        const auto* m = std::get_if<std::int64_t>(&v);
        if (!m || *m < 1) add("configuration.mimo_layers", "must be a positive integer");
    }

    bool strings_ok = valid_utf8(d.schema_version);
    for (const auto& [k, v] : d.software_versions) strings_ok = strings_ok && valid_utf8(k) && valid_utf8(v);
    for (const auto& [k, v] : d.hardware_identifiers) strings_ok = strings_ok && valid_utf8(k) && valid_utf8(v);
    for (const auto& n : d.network_topology.nodes) strings_ok = strings_ok && valid_utf8(n.node_id) && valid_utf8(n.implementation);
    for (const auto& [k, v] : d.configuration) {
        strings_ok = strings_ok && valid_utf8(k);
        if (const auto* s = std::get_if<std::string>(&v)) strings_ok = strings_ok && valid_utf8(*s);
    }
    if (!strings_ok) add("", "strings must be valid UTF-8");

    if (out.empty() && !d.descriptor_id.empty()) {
        const auto expected = sha256_hex(dump_canonical(canonical_json_unchecked(d)));
        if (d.descriptor_id != expected) add("descriptor_id", "does not match content hash " + expected);
    }
    return out;
}

json canonical_json(const ExperimentDescriptor& d) {
    require_valid(d);
    return canonical_json_unchecked(d);
}

std::string canonicalize(const ExperimentDescriptor& d) {
    return dump_canonical(canonical_json(d));
}

std::string hash_descriptor(const ExperimentDescriptor& d) {
    return sha256_hex(canonicalize(d));
}

ExperimentDescriptor seal(ExperimentDescriptor d) {
    d.descriptor_id.clear();
    d.descriptor_id = hash_descriptor(d);
    return d;
}

std::string serialize_descriptor(const ExperimentDescriptor& d) {
    json j = canonical_json(d);
    j["descriptor_id"] = hash_descriptor(d);
    return j.dump();
}

ExperimentDescriptor descriptor_from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("descriptor must be a JSON object");
    static const std::set<std::string> known{"descriptor_id",        "schema_version", "software_versions",
                                             "network_topology",     "hardware_identifiers", "configuration",
                                             "modality",             "created_at"};
    for (const auto& [k, _] : j.items()) {
        if (!known.contains(k)) throw ValidationError("unknown descriptor field: " + k);
    }
    auto required = [&](const char* key) -> const json& {
        if (!j.contains(key)) throw ValidationError(std::string("missing descriptor field: ") + key);
        return j.at(key);
    };
    auto string_map = [](const json& m, const char* what) {
        if (!m.is_object()) throw ValidationError(std::string(what) + " must be an object");
        std::map<std::string, std::string> out;
        for (const auto& [k, v] : m.items()) {
            if (!v.is_string()) throw ValidationError(std::string(what) + "." + k + " must be a string");
            out[k] = v.get<std::string>();
        }
        return out;
    };

    ExperimentDescriptor d;
    const auto& sv = required("schema_version");
    if (!sv.is_string()) throw ValidationError("schema_version must be a string");
    d.schema_version = sv.get<std::string>();
    d.software_versions = string_map(required("software_versions"), "software_versions");
    d.hardware_identifiers = string_map(required("hardware_identifiers"), "hardware_identifiers");

    const auto& cfg = required("configuration");
    if (!cfg.is_object()) throw ValidationError("configuration must be an object");
    for (const auto& [k, v] : cfg.items()) d.configuration[k] = config_value_from_json(v);

    const auto& mod = required("modality");
    const auto m = mod.is_string() ? modality_from_string(mod.get<std::string>()) : std::nullopt;
    if (!m) throw ValidationError("modality must be one of simulation, emulation, in-lab, outdoors");
    d.modality = *m;

    const auto& created = required("created_at");
    if (!created.is_string()) throw ValidationError("created_at must be a string");
    d.created_at = parse_rfc3339(created.get<std::string>());

    const auto& topo = required("network_topology");
    if (!topo.is_object() || !topo.contains("nodes") || !topo.at("nodes").is_array()) {
        throw ValidationError("network_topology.nodes must be an array");
    }
    for (const auto& n : topo.at("nodes")) {
        if (!n.is_object()) throw ValidationError("topology node must be an object");
        TopologyNode node;
        node.node_id = n.value("node_id", "");
        node.implementation = n.value("implementation", "");
        const auto role = node_role_from_string(n.value("role", ""));
        if (!role) throw ValidationError("topology node " + node.node_id + " has an unknown role");
        node.role = *role;
        d.network_topology.nodes.push_back(std::move(node));
    }
    if (topo.contains("links")) {
        if (!topo.at("links").is_array()) throw ValidationError("network_topology.links must be an array");
        for (const auto& l : topo.at("links")) {
            if (!l.is_object()) throw ValidationError("topology link must be an object");
            d.network_topology.links.push_back({l.value("from", ""), l.value("to", ""), l.value("kind", "")});
        }
    }

    if (j.contains("descriptor_id")) {
        if (!j.at("descriptor_id").is_string()) throw ValidationError("descriptor_id must be a string");
        d.descriptor_id = j.at("descriptor_id").get<std::string>();
    }
    require_valid(d);
    return d;
}

ExperimentDescriptor parse_descriptor(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("descriptor is not valid JSON: ") + e.what());
    }
    return descriptor_from_json(j);
}

namespace {

// Flattens canonical JSON into path -> leaf. Topology nodes are keyed by
// node_id and links by endpoints so reordering never shows up as a change.
void flatten(const json& j, const std::string& path, std::map<std::string, json>& out) {
    if (j.is_object()) {
        if (j.empty()) {
            out[path] = json::object();
            return;
        }
        for (const auto& [k, v] : j.items()) flatten(v, path.empty() ? k : path + "." + k, out);
        return;
    }
    if (j.is_array()) {
        if (j.empty()) {
            out[path] = json::array();
            return;
        }
        for (std::size_t i = 0; i < j.size(); ++i) {
            const auto& e = j[i];
            std::string key;
            if (path == "network_topology.nodes") {
                key = e.at("node_id").get<std::string>();
            } else if (path == "network_topology.links") {
                key = e.at("from").get<std::string>() + "->" + e.at("to").get<std::string>() + ":" +
                      e.at("kind").get<std::string>();
            } else {
                key = std::to_string(i);
            }
            flatten(e, path + "[" + key + "]", out);
        }
        return;
    }
    out[path] = j;
}

}  // namespace

DescriptorDiff diff_descriptors(const ExperimentDescriptor& a, const ExperimentDescriptor& b) {
    std::map<std::string, json> fa, fb;
    flatten(canonical_json(a), "", fa);
    flatten(canonical_json(b), "", fb);

    DescriptorDiff diff;
    for (const auto& [path, va] : fa) {
        auto it = fb.find(path);
        if (it == fb.end()) {
            diff.removed.push_back(path);
        } else if (it->second.dump() != va.dump()) {
            diff.changed.push_back({path, va, it->second});
        }
    }
    for (const auto& [path, _] : fb) {
        if (!fa.contains(path)) diff.added.push_back(path);
    }
    return diff;
}

}  // namespace exas
