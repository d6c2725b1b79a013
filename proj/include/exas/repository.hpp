#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "exas/lifecycle.hpp"
#include "exas/time.hpp"
#include "exas/types.hpp"

namespace exas {

// One indexed experiment: links its descriptor, orchestration log and (when
// completed) metrics archive by content hash.
struct ExperimentBundle {
    std::string experiment_id;
    std::string request_id;
    std::string descriptor_ref;
    std::string log_ref;
    std::optional<std::string> metrics_ref;
    ExperimentState state = ExperimentState::completed;
    Timestamp submitted_at{};
    Timestamp finished_at{};

    friend bool operator==(const ExperimentBundle&, const ExperimentBundle&) = default;
};

nlohmann::json to_json(const ExperimentBundle& b);
ExperimentBundle bundle_from_json(const nlohmann::json& j);

struct QueryFilter {
    std::optional<std::string> core_name;
    std::optional<Modality> modality;
    std::optional<ExperimentState> state;
    std::optional<Timestamp> submitted_from;  // inclusive
    std::optional<Timestamp> submitted_to;    // inclusive
    std::optional<std::string> descriptor_ref;
    bool list_all = false;

    static QueryFilter all() {
        QueryFilter f;
        f.list_all = true;
        return f;
    }
    bool valid() const noexcept;
};

struct AuditReport {
    std::vector<std::string> dangling;  // "experiment_id: ref"
    std::vector<std::string> corrupt;   // objects whose bytes no longer hash to their name
    std::vector<std::string> orphans;   // stored objects no index row references

    bool clean() const noexcept { return dangling.empty() && corrupt.empty(); }
};

// Append-only, content-addressed store rooted at a directory:
//   objects/<first2>/<sha256>   immutable object bytes
//   index.log                   one JSON bundle record per line
class Repository {
  public:
    explicit Repository(std::filesystem::path root);
    ~Repository();

    Repository(const Repository&) = delete;
    Repository& operator=(const Repository&) = delete;

    // Idempotent for identical bytes. Throws StorageError.
    std::string put_object(std::string_view bytes);
    // Throws NotFound.
    std::string get_object(const std::string& ref) const;
    bool has_object(const std::string& ref) const;

    // Throws DanglingReference, DuplicateExperiment, ValidationError.
    void index_bundle(const ExperimentBundle& bundle);
    std::optional<ExperimentBundle> lookup(const std::string& experiment_id) const;
    // Sorted by submitted_at, then experiment_id.
    std::vector<ExperimentBundle> query(const QueryFilter& filter) const;

    AuditReport audit() const;

    // exp-YYYYMMDD-xxxxxx and req-YYYYMMDD-xxxxxx, monotonic within a day and
    // never reusing an indexed id.
    std::string next_experiment_id(Timestamp now);
    std::string next_request_id(Timestamp now);

    const std::filesystem::path& root() const noexcept { return root_; }

  private:
    struct Row {
        ExperimentBundle bundle;
        std::set<std::string> core_names;
        Modality modality = Modality::emulation;
    };

    std::filesystem::path object_path(const std::string& ref) const;
    Row make_row(const ExperimentBundle& bundle) const;
    std::string next_id(const std::string& prefix, Timestamp now);

    std::filesystem::path root_;
    mutable std::mutex mutex_;
    std::vector<Row> rows_;
    std::map<std::string, std::size_t> by_id_;
    std::map<std::string, std::uint64_t> counters_;  // "exp-YYYYMMDD" -> next
    int index_fd_ = -1;
};

}  // namespace exas
