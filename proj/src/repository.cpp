#include "exas/repository.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "exas/descriptor.hpp"
#include "exas/errors.hpp"
#include "exas/hash.hpp"

namespace exas {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view index_schema = "exas-index/1";

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw NotFound("cannot open " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

json to_json(const ExperimentBundle& b) {
    return json{{"schema", index_schema},
                {"experiment_id", b.experiment_id},
                {"request_id", b.request_id},
                {"descriptor_ref", b.descriptor_ref},
                {"log_ref", b.log_ref},
                {"metrics_ref", b.metrics_ref ? json(*b.metrics_ref) : json(nullptr)},
                {"state", to_string(b.state)},
                {"submitted_at", format_rfc3339(b.submitted_at)},
                {"finished_at", format_rfc3339(b.finished_at)}};
}

ExperimentBundle bundle_from_json(const json& j) {
    if (j.value("schema", "") != index_schema) throw ValidationError("unsupported index record schema");
    ExperimentBundle b;
    b.experiment_id = j.at("experiment_id").get<std::string>();
    b.request_id = j.value("request_id", "");
    b.descriptor_ref = j.at("descriptor_ref").get<std::string>();
    b.log_ref = j.at("log_ref").get<std::string>();
    if (!j.at("metrics_ref").is_null()) b.metrics_ref = j.at("metrics_ref").get<std::string>();
    const auto st = state_from_string(j.at("state").get<std::string>());
    if (!st) throw ValidationError("index record has an invalid state");
    b.state = *st;
    b.submitted_at = parse_rfc3339(j.at("submitted_at").get<std::string>());
    b.finished_at = parse_rfc3339(j.at("finished_at").get<std::string>());
    return b;
}

bool QueryFilter::valid() const noexcept {
    return list_all || core_name || modality || state || submitted_from || submitted_to || descriptor_ref;
}

Repository::Repository(fs::path root) : root_(std::move(root)) {
    std::error_code ec;
    fs::create_directories(root_ / "objects", ec);
    if (ec) throw StorageError("cannot create repository at " + root_.string() + ": " + ec.message());

    const auto index = root_ / "index.log";
    if (fs::exists(index)) {
        std::ifstream in(index);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            ExperimentBundle b;
            try {
                b = bundle_from_json(json::parse(line));
            } catch (const std::exception& e) {
                // A torn final line from a crash mid-append is skipped.
                std::fprintf(stderr, "exas: skipping unreadable index line %zu: %s\n", lineno, e.what());
                continue;
            }
            by_id_[b.experiment_id] = rows_.size();
            rows_.push_back(make_row(b));
        }
    }
    index_fd_ = ::open(index.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (index_fd_ < 0) throw StorageError("cannot open " + index.string());
}

Repository::~Repository() {
    if (index_fd_ >= 0) ::close(index_fd_);
}

fs::path Repository::object_path(const std::string& ref) const {
    return root_ / "objects" / ref.substr(0, 2) / ref;
}

std::string Repository::put_object(std::string_view bytes) {
    if (bytes.empty()) throw ValidationError("cannot store an empty object");
    const auto ref = sha256_hex(bytes);
    const auto path = object_path(ref);
    std::error_code ec;
    if (fs::exists(path, ec)) return ref;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw StorageError("cannot create " + path.parent_path().string() + ": " + ec.message());

    static std::atomic<std::uint64_t> tmp_counter{0};
    const auto tmp = path.parent_path() /
                     (".tmp-" + std::to_string(::getpid()) + "-" + std::to_string(tmp_counter.fetch_add(1)));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) throw StorageError("cannot write object " + ref);
    }
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        throw StorageError("cannot publish object " + ref + ": " + ec.message());
    }
    return ref;
}

std::string Repository::get_object(const std::string& ref) const {
    if (!is_hex_digest(ref)) throw NotFound("not an object reference: " + ref);
    const auto path = object_path(ref);
    if (!fs::exists(path)) throw NotFound("no object " + ref);
    return read_file(path);
}

bool Repository::has_object(const std::string& ref) const {
    return is_hex_digest(ref) && fs::exists(object_path(ref));
}

Repository::Row Repository::make_row(const ExperimentBundle& bundle) const {
    Row row{bundle, {}, Modality::emulation};
    try {
        const auto d = parse_descriptor(get_object(bundle.descriptor_ref));
        row.modality = d.modality;
        for (const auto& n : d.network_topology.nodes) {
            if (n.role == NodeRole::core) row.core_names.insert(normalize_name(n.implementation));
        }
    } catch (const Error&) {
        // Left for the auditor to report.
    }
    return row;
}

void Repository::index_bundle(const ExperimentBundle& b) {
    if (b.experiment_id.empty()) throw ValidationError("bundle needs an experiment_id");
    if (!is_terminal(b.state)) throw ValidationError("only terminal experiments are indexed");
    if (b.metrics_ref.has_value() != (b.state == ExperimentState::completed)) {
        throw ValidationError("metrics_ref must be present exactly when the experiment completed");
    }
    for (const auto* ref : {&b.descriptor_ref, &b.log_ref}) {
        if (!has_object(*ref)) throw DanglingReference(b.experiment_id + " references missing object " + *ref);
    }
    if (b.metrics_ref && !has_object(*b.metrics_ref)) {
        throw DanglingReference(b.experiment_id + " references missing metrics " + *b.metrics_ref);
    }
    auto row = make_row(b);

    std::lock_guard lock(mutex_);
    if (by_id_.contains(b.experiment_id)) throw DuplicateExperiment("experiment already indexed: " + b.experiment_id);
    const std::string line = to_json(b).dump() + "\n";
    std::size_t written = 0;
    while (written < line.size()) {
        const auto n = ::write(index_fd_, line.data() + written, line.size() - written);
        if (n < 0) throw StorageError("index append failed");
        written += static_cast<std::size_t>(n);
    }
    if (::fsync(index_fd_) != 0) throw StorageError("index fsync failed");
    by_id_[b.experiment_id] = rows_.size();
    rows_.push_back(std::move(row));
}

std::optional<ExperimentBundle> Repository::lookup(const std::string& experiment_id) const {
    std::lock_guard lock(mutex_);
    auto it = by_id_.find(experiment_id);
    if (it == by_id_.end()) return std::nullopt;
    return rows_[it->second].bundle;
}

std::vector<ExperimentBundle> Repository::query(const QueryFilter& f) const {
    if (!f.valid()) throw ValidationError("query filter needs at least one field or list_all");
    const auto core = f.core_name ? std::optional(normalize_name(*f.core_name)) : std::nullopt;
    std::vector<ExperimentBundle> out;
    {
        std::lock_guard lock(mutex_);
        for (const auto& row : rows_) {
            const auto& b = row.bundle;
            if (core && !row.core_names.contains(*core)) continue;
            if (f.modality && row.modality != *f.modality) continue;
            if (f.state && b.state != *f.state) continue;
            if (f.submitted_from && b.submitted_at < *f.submitted_from) continue;
            if (f.submitted_to && b.submitted_at > *f.submitted_to) continue;
            if (f.descriptor_ref && b.descriptor_ref != *f.descriptor_ref) continue;
            out.push_back(b);
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const ExperimentBundle& a, const ExperimentBundle& b) {
        return std::tie(a.submitted_at, a.experiment_id) < std::tie(b.submitted_at, b.experiment_id);
    });
    return out;
}

AuditReport Repository::audit() const {
    AuditReport report;
    std::set<std::string> referenced;
    std::vector<ExperimentBundle> bundles;
    {
        std::lock_guard lock(mutex_);
        for (const auto& row : rows_) bundles.push_back(row.bundle);
    }
    for (const auto& b : bundles) {
        std::vector<std::string> refs{b.descriptor_ref, b.log_ref};
        if (b.metrics_ref) refs.push_back(*b.metrics_ref);
        for (const auto& ref : refs) {
            referenced.insert(ref);
            if (!has_object(ref)) report.dangling.push_back(b.experiment_id + ": " + ref);
        }
    }
    std::error_code ec;
    for (const auto& entry : fs::recursive_directory_iterator(root_ / "objects", ec)) {
        if (!entry.is_regular_file()) continue;
        const auto name = entry.path().filename().string();
        if (!is_hex_digest(name)) continue;
        if (sha256_hex(read_file(entry.path())) != name) report.corrupt.push_back(name);
        if (!referenced.contains(name)) report.orphans.push_back(name);
    }
    std::sort(report.orphans.begin(), report.orphans.end());
    return report;
}

std::string Repository::next_id(const std::string& prefix, Timestamp now) {
    const auto day = prefix + "-" + utc_date_compact(now);
    std::lock_guard lock(mutex_);
    auto it = counters_.find(day);
    if (it == counters_.end()) {
        std::uint64_t next = 1;
        auto bump = [&](const std::string& id) {
            if (id.size() == day.size() + 7 && id.starts_with(day + "-")) {
                next = std::max<std::uint64_t>(next, std::stoull(id.substr(day.size() + 1), nullptr, 16) + 1);
            }
        };
        for (const auto& row : rows_) {
            bump(row.bundle.experiment_id);
            bump(row.bundle.request_id);
        }
        it = counters_.emplace(day, next).first;
    }
    char buf[8];
    std::snprintf(buf, sizeof buf, "%06llx", static_cast<unsigned long long>(it->second++ & 0xffffff));
    return day + "-" + buf;
}

std::string Repository::next_experiment_id(Timestamp now) {
    return next_id("exp", now);
}

std::string Repository::next_request_id(Timestamp now) {
    return next_id("req", now);
}

}  // namespace exas
