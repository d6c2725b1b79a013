#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "exas/catalog.hpp"
#include "exas/descriptor.hpp"
#include "exas/types.hpp"

namespace exas {

enum class KpiMetric { mean_throughput, p95_latency, mean_cpu_util };
enum class Comparator { exceeds, below };
enum class Unit { mbps, ms, percent };

std::string_view to_string(KpiMetric m) noexcept;
std::string_view to_string(Comparator c) noexcept;
std::string_view to_string(Unit u) noexcept;
Unit unit_for(KpiMetric m) noexcept;

struct KpiCriterion {
    KpiMetric metric = KpiMetric::mean_throughput;
    Comparator comparator = Comparator::exceeds;
    double threshold = 0.0;
    Unit unit = Unit::mbps;
    std::vector<TrafficKind> traffic_kinds{TrafficKind::tcp, TrafficKind::udp};

    // Throws UnitMismatch or ValidationError.
    void check() const;
    friend bool operator==(const KpiCriterion&, const KpiCriterion&) = default;
};

struct ExperimentPlan {
    std::string app_under_test;
    std::vector<std::string> target_cores;
    KpiCriterion kpi;
    Modality modality = Modality::emulation;
    int duration_s = 120;
    int interval_s = 1;
    ResourceVector per_run_resources;
    ConfigMap template_overrides;
    std::uint64_t seed = 1;
    // Copies of each core run. Lets a request ask for many runs of one core.
    int repetitions = 1;

    int runs() const noexcept { return static_cast<int>(target_cores.size()) * repetitions; }
    ResourceVector total_demand() const noexcept { return per_run_resources * runs(); }
};

void to_json(nlohmann::json& j, const KpiCriterion& k);
void from_json(const nlohmann::json& j, KpiCriterion& k);
void to_json(nlohmann::json& j, const ExperimentPlan& p);
void from_json(const nlohmann::json& j, ExperimentPlan& p);

// Fields extracted from request text; anything absent is a gap.
struct PlanDraft {
    std::optional<std::string> app;
    std::optional<std::string> unknown_app;
    std::vector<std::string> cores;
    std::vector<std::string> unknown_cores;
    std::optional<KpiMetric> metric;
    std::optional<Comparator> comparator;
    std::optional<double> threshold;
    std::optional<Unit> unit;
    std::optional<int> duration_s;
    std::optional<int> interval_s;
    std::vector<TrafficKind> traffic;
    std::optional<Modality> modality;
    ConfigMap overrides;
    std::optional<std::uint64_t> seed;
    std::optional<int> repetitions;
    std::optional<std::int64_t> cpu_cores_per_run;
    std::optional<std::int64_t> vgpus_per_run;
    std::optional<std::int64_t> storage_gb_per_run;
};

enum class DecisionKind { approved, clarification_required, denied };
std::string_view to_string(DecisionKind k) noexcept;

struct Question {
    std::string field;  // app_under_test, target_cores, kpi_metric, kpi_threshold, duration
    std::string text;
};

// Three-way outcome. Exactly one of plan / questions / reason is populated,
// matching kind. draft carries partial state between clarification rounds.
struct IntentDecision {
    DecisionKind kind = DecisionKind::clarification_required;
    std::optional<ExperimentPlan> plan;
    std::vector<Question> questions;
    std::string reason;
    PlanDraft draft;
};

// Slot for an external interpreter (a locally deployed language model, for
// instance). Its drafts are re-checked against the catalog before use.
class IntentModelClient {
  public:
    virtual ~IntentModelClient() = default;
    virtual std::optional<PlanDraft> draft(std::string_view request_text) = 0;
};

PlanDraft parse_request(std::string_view text, const Catalog& catalog);

IntentDecision interpret(std::string_view request_text, const Catalog& catalog, const PlanDefaults& defaults,
                         IntentModelClient* model = nullptr);

// Throws StateError unless previous is clarification_required.
IntentDecision merge_clarification(const IntentDecision& previous, std::string_view answer_text,
                                   const Catalog& catalog, const PlanDefaults& defaults);

IntentDecision gate(const ExperimentPlan& plan, const ResourceVector& available, const Policy& policy);

}  // namespace exas
