#include "exas/telemetry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "exas/errors.hpp"
#include "exas/repository.hpp"

namespace exas {

using nlohmann::json;

namespace {

double median_of(std::span<const double> sorted) {
    const auto n = sorted.size();
    return n % 2 == 1 ? sorted[n / 2] : (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0;
}

}  // namespace

TraceSummary summarize_values(std::span<const double> values) {
    if (values.empty()) throw EmptyTrace();
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const auto n = sorted.size();

    TraceSummary s;
    s.count = n;
    // Shifted by the first value: exact for constant series.
    const double shift = values.front();
    double sum = 0.0;
    for (double v : values) sum += v - shift;
    s.mean = shift + sum / static_cast<double>(n);
    double sq = 0.0;
    for (double v : values) sq += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(sq / static_cast<double>(n));
    s.min = sorted.front();
    s.max = sorted.back();
    s.median = median_of(sorted);
    // Tukey hinges: halves of ceil(n/2) elements, sharing the median when n
    // is odd.
    const auto half = (n + 1) / 2;
    s.q1 = median_of(std::span<const double>(sorted).first(half));
    s.q3 = median_of(std::span<const double>(sorted).last(half));
    // ceil(0.95 n) in integers.
    const auto rank = (95 * n + 99) / 100;
    s.p95 = sorted[std::max<std::size_t>(rank, 1) - 1];
    return s;
}

TraceSummary summarize(const ThroughputTrace& trace) {
    return summarize_for(trace, KpiMetric::mean_throughput);
}

TraceSummary summarize_for(const ThroughputTrace& trace, KpiMetric metric) {
    std::vector<double> values;
    values.reserve(trace.samples.size());
    for (const auto& s : trace.samples) {
        switch (metric) {
            case KpiMetric::mean_throughput: values.push_back(s.mbps); break;
            case KpiMetric::p95_latency: values.push_back(s.latency_ms); break;
            case KpiMetric::mean_cpu_util: values.push_back(s.cpu_pct); break;
        }
    }
    return summarize_values(values);
}

double observed_value(const TraceSummary& s, KpiMetric metric) noexcept {
    return metric == KpiMetric::p95_latency ? s.p95 : s.mean;
}

KpiVerdict evaluate_kpi(const std::map<RunKey, TraceSummary>& summaries, const KpiCriterion& criterion,
                        std::span<const RunKey> requested) {
    criterion.check();
    KpiVerdict v;
    v.criterion = criterion;
    for (const auto& [key, summary] : summaries) {
        const double observed = observed_value(summary, criterion.metric);
        const bool pass = criterion.comparator == Comparator::exceeds ? observed > criterion.threshold
                                                                       : observed < criterion.threshold;
        v.per_run[key] = {observed, pass};
    }
    for (const auto& key : requested) {
        if (!summaries.contains(key)) v.partial = true;
    }
    v.overall_pass = !v.per_run.empty() &&
                     std::all_of(v.per_run.begin(), v.per_run.end(), [](const auto& kv) { return kv.second.pass; });
    return v;
}

json to_json(const TraceSummary& s) {
    return json{{"count", s.count}, {"mean", s.mean}, {"std", s.std},   {"min", s.min},  {"q1", s.q1},
                {"median", s.median}, {"q3", s.q3},   {"max", s.max},   {"p95", s.p95}};
}

json to_json(const KpiVerdict& v) {
    json runs = json::array();
    for (const auto& [key, outcome] : v.per_run) {
        runs.push_back({{"core", key.core},
                        {"traffic", to_string(key.traffic)},
                        {"observed", outcome.observed},
                        {"pass", outcome.pass}});
    }
    return json{{"criterion", v.criterion}, {"per_run", runs}, {"overall_pass", v.overall_pass}, {"partial", v.partial}};
}

KpiVerdict verdict_from_json(const json& j) {
    KpiVerdict v;
    v.criterion = j.at("criterion").get<KpiCriterion>();
    for (const auto& r : j.at("per_run")) {
        auto traffic = traffic_from_string(r.at("traffic").get<std::string>());
        if (!traffic) throw ValidationError("verdict has an invalid traffic kind");
        v.per_run[{r.at("core").get<std::string>(), *traffic}] = {r.at("observed").get<double>(), r.at("pass").get<bool>()};
    }
    v.overall_pass = j.at("overall_pass").get<bool>();
    v.partial = j.at("partial").get<bool>();
    return v;
}

std::string archive_metrics(Repository& repo, const std::string& experiment_id, const std::string& descriptor_id,
                            const std::vector<ThroughputTrace>& traces,
                            const std::map<RunKey, TraceSummary>& summaries, const KpiVerdict& verdict) {
    json runs = json::array();
    for (const auto& t : traces) {
        if (t.experiment_id != experiment_id) {
            throw ValidationError("trace for " + t.core_name + "/" + std::string(to_string(t.traffic)) +
                                  " belongs to experiment " + t.experiment_id + ", not " + experiment_id);
        }
        json samples = json::array();
        for (const auto& s : t.samples) samples.push_back({s.t_offset_s, s.mbps, s.latency_ms, s.cpu_pct});
        json run{{"core", t.core_name},
                 {"traffic", to_string(t.traffic)},
                 {"interval_s", t.interval_s},
                 {"truncated", t.truncated},
                 {"samples", samples}};
        if (auto it = summaries.find({t.core_name, t.traffic}); it != summaries.end()) {
            run["summary"] = to_json(it->second);
        }
        runs.push_back(std::move(run));
    }
    for (const auto& [key, _] : summaries) {
        const bool has_trace = std::any_of(traces.begin(), traces.end(), [&](const ThroughputTrace& t) {
            return t.core_name == key.core && t.traffic == key.traffic;
        });
        if (!has_trace) throw ValidationError("summary for " + key.core + " has no matching trace");
    }
    const json archive{{"schema_version", "1.0.0"},
                       {"kind", "metrics-archive"},
                       {"descriptor_id", descriptor_id},
                       {"sample_columns", {"t_offset_s", "mbps", "latency_ms", "cpu_pct"}},
                       {"statistics", {{"std", "population"}, {"quartiles", "tukey-hinges"}, {"p95", "nearest-rank"}}},
                       {"runs", runs},
                       {"verdict", to_json(verdict)}};
    return repo.put_object(archive.dump());
}

std::string metrics_csv(const json& archive) {
    std::ostringstream out;
    out << "t_offset_s,core,traffic,mbps\n";
    for (const auto& run : archive.at("runs")) {
        const auto core = run.at("core").get<std::string>();
        const auto traffic = run.at("traffic").get<std::string>();
        for (const auto& s : run.at("samples")) {
            out << json(s.at(0)).dump() << ',' << core << ',' << traffic << ',' << json(s.at(1)).dump() << '\n';
        }
    }
    return out.str();
}

}  // namespace exas
