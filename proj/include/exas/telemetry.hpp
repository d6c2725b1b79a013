#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "exas/intent.hpp"
#include "exas/types.hpp"

namespace exas {

class Repository;

// One per-interval measurement. Latency and CPU ride along with throughput;
// only throughput is gated by default.
struct Sample {
    double t_offset_s = 0.0;
    double mbps = 0.0;
    double latency_ms = 0.0;
    double cpu_pct = 0.0;

    friend bool operator==(const Sample&, const Sample&) = default;
};

struct ThroughputTrace {
    std::string experiment_id;
    std::string core_name;
    TrafficKind traffic = TrafficKind::tcp;
    double interval_s = 1.0;
    std::vector<Sample> samples;
    bool truncated = false;
};

struct TraceSummary {
    std::size_t count = 0;
    double mean = 0.0;
    double std = 0.0;  // population
    double min = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double max = 0.0;
    double p95 = 0.0;  // nearest rank
};

// Mean, population std, Tukey hinges. Throws EmptyTrace.
TraceSummary summarize_values(std::span<const double> values);
TraceSummary summarize(const ThroughputTrace& trace);
// Summary of whichever series the metric reads (throughput, latency, cpu).
TraceSummary summarize_for(const ThroughputTrace& trace, KpiMetric metric);

struct RunKey {
    std::string core;
    TrafficKind traffic = TrafficKind::tcp;

    friend auto operator<=>(const RunKey&, const RunKey&) = default;
};

struct RunOutcome {
    double observed = 0.0;
    bool pass = false;
};

struct KpiVerdict {
    KpiCriterion criterion;
    std::map<RunKey, RunOutcome> per_run;
    bool overall_pass = false;
    bool partial = false;
};

// Mean for mean_* metrics, p95 for p95_latency.
double observed_value(const TraceSummary& s, KpiMetric metric) noexcept;

// Evaluates every summary against the criterion. Requested pairs without a
// summary mark the verdict partial. Throws UnitMismatch.
KpiVerdict evaluate_kpi(const std::map<RunKey, TraceSummary>& summaries, const KpiCriterion& criterion,
                        std::span<const RunKey> requested);

nlohmann::json to_json(const TraceSummary& s);
nlohmann::json to_json(const KpiVerdict& v);
KpiVerdict verdict_from_json(const nlohmann::json& j);

// Writes one content-addressed metrics archive. The payload is keyed by
// descriptor_id and omits experiment_id, so identical descriptors yield
// identical archives. Throws ValidationError when a trace belongs to another
// experiment.
std::string archive_metrics(Repository& repo, const std::string& experiment_id, const std::string& descriptor_id,
                            const std::vector<ThroughputTrace>& traces,
                            const std::map<RunKey, TraceSummary>& summaries, const KpiVerdict& verdict);

// `t_offset_s,core,traffic,mbps` rows for every sample of an archive.
std::string metrics_csv(const nlohmann::json& archive);

}  // namespace exas
