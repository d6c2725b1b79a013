#include "exas/intent.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <regex>

#include "exas/errors.hpp"

namespace exas {

using nlohmann::json;

std::string_view to_string(KpiMetric m) noexcept {
    switch (m) {
        case KpiMetric::mean_throughput: return "mean_throughput";
        case KpiMetric::p95_latency: return "p95_latency";
        case KpiMetric::mean_cpu_util: return "mean_cpu_util";
    }
    return "unknown";
}

std::string_view to_string(Comparator c) noexcept {
    return c == Comparator::exceeds ? "exceeds" : "below";
}

std::string_view to_string(Unit u) noexcept {
    switch (u) {
        case Unit::mbps: return "Mbps";
        case Unit::ms: return "ms";
        case Unit::percent: return "percent";
    }
    return "unknown";
}

Unit unit_for(KpiMetric m) noexcept {
    switch (m) {
        case KpiMetric::mean_throughput: return Unit::mbps;
        case KpiMetric::p95_latency: return Unit::ms;
        case KpiMetric::mean_cpu_util: return Unit::percent;
    }
    return Unit::mbps;
}

std::string_view to_string(DecisionKind k) noexcept {
    switch (k) {
        case DecisionKind::approved: return "approved";
        case DecisionKind::clarification_required: return "clarification_required";
        case DecisionKind::denied: return "denied";
    }
    return "unknown";
}

void KpiCriterion::check() const {
    if (!(threshold > 0) || !std::isfinite(threshold)) throw ValidationError("KPI threshold must be > 0");
    if (unit != unit_for(metric)) {
        throw UnitMismatch("metric " + std::string(to_string(metric)) + " is measured in " +
                           std::string(to_string(unit_for(metric))) + ", not " + std::string(to_string(unit)));
    }
    if (traffic_kinds.empty()) throw ValidationError("KPI needs at least one traffic kind");
}

namespace {

template <typename E>
E enum_from_json(const json& j, std::initializer_list<E> values, const char* what) {
    if (j.is_string()) {
        for (auto v : values) {
            if (to_string(v) == j.get<std::string>()) return v;
        }
    }
    throw ValidationError(std::string("invalid ") + what + ": " + j.dump());
}

}  // namespace

void to_json(json& j, const KpiCriterion& k) {
    json traffic = json::array();
    for (auto t : k.traffic_kinds) traffic.push_back(to_string(t));
    j = json{{"metric", to_string(k.metric)},
             {"comparator", to_string(k.comparator)},
             {"threshold", k.threshold},
             {"unit", to_string(k.unit)},
             {"traffic_kinds", traffic}};
}

void from_json(const json& j, KpiCriterion& k) {
    k.metric = enum_from_json(j.at("metric"), {KpiMetric::mean_throughput, KpiMetric::p95_latency, KpiMetric::mean_cpu_util},
                              "metric");
    k.comparator = enum_from_json(j.at("comparator"), {Comparator::exceeds, Comparator::below}, "comparator");
    k.threshold = j.at("threshold").get<double>();
    k.unit = enum_from_json(j.at("unit"), {Unit::mbps, Unit::ms, Unit::percent}, "unit");
    k.traffic_kinds.clear();
    for (const auto& t : j.at("traffic_kinds")) {
        auto kind = traffic_from_string(t.get<std::string>());
        if (!kind) throw ValidationError("invalid traffic kind: " + t.dump());
        k.traffic_kinds.push_back(*kind);
    }
}

void to_json(json& j, const ExperimentPlan& p) {
    json overrides = json::object();
    for (const auto& [k, v] : p.template_overrides) overrides[k] = config_value_to_json(v);
    j = json{{"app_under_test", p.app_under_test},
             {"target_cores", p.target_cores},
             {"kpi", p.kpi},
             {"modality", to_string(p.modality)},
             {"duration_s", p.duration_s},
             {"interval_s", p.interval_s},
             {"per_run_resources", p.per_run_resources},
             {"template_overrides", overrides},
             {"seed", p.seed},
             {"repetitions", p.repetitions}};
}

void from_json(const json& j, ExperimentPlan& p) {
    p.app_under_test = j.at("app_under_test").get<std::string>();
    p.target_cores = j.at("target_cores").get<std::vector<std::string>>();
    p.kpi = j.at("kpi").get<KpiCriterion>();
    const auto m = modality_from_string(j.at("modality").get<std::string>());
    if (!m) throw ValidationError("invalid modality in plan");
    p.modality = *m;
    p.duration_s = j.at("duration_s").get<int>();
    p.interval_s = j.at("interval_s").get<int>();
    p.per_run_resources = j.at("per_run_resources").get<ResourceVector>();
    p.template_overrides.clear();
    for (const auto& [k, v] : j.value("template_overrides", json::object()).items()) {
        p.template_overrides[k] = config_value_from_json(v);
    }
    p.seed = j.at("seed").get<std::uint64_t>();
    p.repetitions = j.value("repetitions", 1);
}

// ---------------------------------------------------------------------------
// Request grammar

namespace {

constexpr auto icase = std::regex::ECMAScript | std::regex::icase;

std::optional<std::smatch> search(const std::string& text, const std::regex& re) {
    std::smatch m;
    if (std::regex_search(text, m, re)) return m;
    return std::nullopt;
}

std::optional<double> to_double(const std::string& s) {
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size() || !std::isfinite(v)) return std::nullopt;
        return v;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

std::optional<std::int64_t> to_int(const std::string& s) {
    try {
        std::size_t used = 0;
        long long v = std::stoll(s, &used);
        if (used != s.size()) return std::nullopt;
        return v;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_words(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.' || c == '+' || c == '<' ||
            c == '>') {
            cur.push_back(c);
        } else if (!cur.empty()) {
            out.push_back(cur);
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(cur);
    for (auto& w : out) {
        while (!w.empty() && (w.back() == '.' || w.back() == '-')) w.pop_back();
    }
    std::erase_if(out, [](const std::string& w) { return w.empty(); });
    return out;
}

void push_unique(std::vector<std::string>& v, const std::string& s) {
    if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
}

bool is_filler(const std::string& word) {
    static const std::vector<std::string> filler{
        "the",  "a",    "an",   "one",   "two",   "three", "four",  "five",  "both",  "all",
        "5g",   "5gc",  "core", "cores", "implementation", "implementations", "network", "networks",
        "each", "of",   "different", "installed", "available", "emulated", "physical", "and", "or",
        "use",  "using", "instead", "replace", "with", "on", "in", "lab", "in-lab", "ota", "real",
        "systems", "system", "following", "these"};
    return std::find(filler.begin(), filler.end(), lower(word)) != filler.end();
}

// Matches catalog cores in free text: single words and adjacent word pairs
// ("OAI CN").
std::vector<std::string> scan_cores(const std::string& text, const Catalog& catalog) {
    std::vector<std::string> found;
    const auto words = split_words(text);
    for (std::size_t i = 0; i < words.size(); ++i) {
        if (const auto* p = catalog.find_core(words[i])) {
            push_unique(found, p->core_name);
        } else if (i + 1 < words.size()) {
            if (const auto* q = catalog.find_core(words[i] + words[i + 1])) {
                push_unique(found, q->core_name);
                ++i;
            }
        }
    }
    return found;
}

struct CoreMentions {
    bool explicit_list = false;
    std::vector<std::string> known;
    std::vector<std::string> unknown;
};

CoreMentions parse_cores(const std::string& text, const Catalog& catalog) {
    static const std::regex trigger(R"(\b(?:across|against|on)\s+)", icase);
    static const std::regex terminator(
        R"((?:,\s*)?\b(?:(?:and|then)\s+)?(?:to\s+)?(?:verify|check|ensure|assert|confirm|validate|with|for|using|while|where|then)\b|[.;:])",
        icase);
    static const std::regex repeat_phrase(
        R"(\b\d+\s*(?:concurrent\s+|parallel\s+|independent\s+)?(?:times|runs|repetitions|x)\b)", icase);

    CoreMentions out;
    auto m = search(text, trigger);
    if (!m) {
        out.known = scan_cores(text, catalog);
        return out;
    }
    std::string segment = m->suffix().str();
    // Parenthesized lists may contain separators that look like terminators.
    const auto open = segment.find('(');
    std::smatch end;
    const bool has_end = std::regex_search(segment, end, terminator);
    if (open != std::string::npos && (!has_end || static_cast<std::size_t>(end.position(0)) > open)) {
        const auto close = segment.find(')', open);
        segment = segment.substr(open + 1, close == std::string::npos ? std::string::npos : close - open - 1);
    } else if (has_end) {
        segment = segment.substr(0, static_cast<std::size_t>(end.position(0)));
    }
    segment = std::regex_replace(segment, repeat_phrase, " ");

    static const std::regex separators(R"(\s*(?:,|/|&|\band\b|\bor\b)\s*)", icase);
    std::sregex_token_iterator it(segment.begin(), segment.end(), separators, -1), last;
    bool mentioned_all = false;
    for (; it != last; ++it) {
        const auto item = trim(it->str());
        if (item.empty()) continue;
        std::vector<std::string> words;
        for (const auto& w : split_words(item)) {
            if (lower(w) == "all") mentioned_all = true;
            if (!is_filler(w)) words.push_back(w);
        }
        if (words.empty()) continue;
        const auto known = scan_cores(item, catalog);
        if (!known.empty()) {
            for (const auto& k : known) push_unique(out.known, k);
            out.explicit_list = true;
            continue;
        }
        // A single unmatched name-like word is an unknown core; longer
        // phrases are prose and ignored.
        if (words.size() == 1 && words[0].size() >= 2 &&
            std::any_of(words[0].begin(), words[0].end(), [](char c) { return std::isalpha(static_cast<unsigned char>(c)); })) {
            push_unique(out.unknown, words[0]);
            out.explicit_list = true;
        }
    }
    if (out.known.empty() && out.unknown.empty() && mentioned_all) {
        for (const auto& [name, _] : catalog.cores) out.known.push_back(name);
        out.explicit_list = true;
    }
    if (!out.explicit_list) out.known = scan_cores(text, catalog);
    return out;
}

struct ThresholdMatch {
    double value;
    Unit unit;
};

std::optional<ThresholdMatch> parse_threshold(const std::string& text) {
    static const std::regex re(
        R"((\d+(?:\.\d+)?)\s*(gbps|gbit/s|gb/s|mbps|mbit/s|mb/s|kbps|kbit/s|kb/s|milliseconds|millisecond|ms|%|percent)(?![a-z]))",
        icase);
    auto m = search(text, re);
    if (!m) return std::nullopt;
    auto v = to_double((*m)[1].str());
    if (!v) return std::nullopt;
    const auto unit = lower((*m)[2].str());
    if (unit.starts_with("g")) return ThresholdMatch{*v * 1000.0, Unit::mbps};
    if (unit.starts_with("k")) return ThresholdMatch{*v / 1000.0, Unit::mbps};
    if (unit.starts_with("mb") || unit == "mbit/s") return ThresholdMatch{*v, Unit::mbps};
    if (unit == "ms" || unit.starts_with("milli")) return ThresholdMatch{*v, Unit::ms};
    return ThresholdMatch{*v, Unit::percent};
}

void parse_kpi(const std::string& text, PlanDraft& d) {
    static const std::regex verify(R"(\b(?:verify|check|ensure|assert|confirm|validate)\b)", icase);
    std::string clause = text;
    if (auto m = search(text, verify)) clause = m->suffix().str();

    static const std::regex throughput(R"(\bthroughput\b)", icase);
    static const std::regex latency(R"(\blatency\b)", icase);
    static const std::regex cpu(R"(\bcpu\s*(?:utili[sz]ation|usage|load|util)\b)", icase);
    std::optional<std::pair<std::ptrdiff_t, KpiMetric>> best;
    for (const auto& [re, metric] : {std::pair{&throughput, KpiMetric::mean_throughput},
                                     std::pair{&latency, KpiMetric::p95_latency},
                                     std::pair{&cpu, KpiMetric::mean_cpu_util}}) {
        if (auto m = search(clause, *re); m && (!best || m->position(0) < best->first)) {
            best = std::pair{m->position(0), metric};
        }
    }
    if (best) d.metric = best->second;

    static const std::regex below(
        R"(\b(?:stays?\s+below|remains?\s+below|below|under|less\s+than|lower\s+than|does\s+not\s+exceed|doesn't\s+exceed|at\s+most)\b)",
        icase);
    static const std::regex exceeds(R"(\b(?:exceeds?|exceeding|above|greater\s+than|more\s+than|higher\s+than|over)\b)",
                                    icase);
    if (search(clause, below)) {
        d.comparator = Comparator::below;
    } else if (search(clause, exceeds)) {
        d.comparator = Comparator::exceeds;
    }

    if (auto t = parse_threshold(clause)) {
        d.threshold = t->value;
        d.unit = t->unit;
    }
}

std::optional<int> to_seconds(const std::string& number, const std::string& unit) {
    auto n = to_int(number);
    if (!n || *n > 86400 * 7) return std::nullopt;
    const auto u = lower(unit);
    return static_cast<int>(u.starts_with("m") ? *n * 60 : *n);
}

void parse_timing(std::string text, PlanDraft& d) {
    static const std::regex every_unit(R"(\bevery\s+(\d+)\s*(seconds?|secs?|s|minutes?|mins?)\b)", icase);
    static const std::regex every_second(R"(\bevery\s+(second|minute)\b)", icase);
    if (auto m = search(text, every_unit)) {
        d.interval_s = to_seconds((*m)[1].str(), (*m)[2].str());
        text = m->prefix().str() + " " + m->suffix().str();
    } else if (auto m2 = search(text, every_second)) {
        d.interval_s = lower((*m2)[1].str()) == "minute" ? 60 : 1;
        text = m2->prefix().str() + " " + m2->suffix().str();
    }
    static const std::regex duration(R"((\d+)\s*-?\s*(seconds?|secs?|minutes?|mins?)\b)", icase);
    static const std::regex for_seconds(R"(\bfor\s+(\d+)\s*(s|m)\b)", icase);
    if (auto m = search(text, duration)) {
        d.duration_s = to_seconds((*m)[1].str(), (*m)[2].str());
    } else if (auto m2 = search(text, for_seconds)) {
        d.duration_s = to_seconds((*m2)[1].str(), (*m2)[2].str());
    }
}

void parse_modality(const std::string& text, PlanDraft& d) {
    static const std::regex in_lab(R"(\bin[- ]?lab\b|\bota\b|over[- ]the[- ]air|\banechoic\b)", icase);
    static const std::regex outdoors(R"(\boutdoors?\b|\bfield\s+trials?\b)", icase);
    static const std::regex simulation(R"(\bsimulat(?:ion|ed|or)\b|\bns-?3\b|\bkomondor\b)", icase);
    static const std::regex emulation(R"(\bemulat(?:ion|ed|or)\b)", icase);
    std::optional<std::pair<std::ptrdiff_t, Modality>> best;
    for (const auto& [re, mod] : {std::pair{&in_lab, Modality::in_lab}, std::pair{&outdoors, Modality::outdoors},
                                  std::pair{&simulation, Modality::simulation},
                                  std::pair{&emulation, Modality::emulation}}) {
        if (auto m = search(text, *re); m && (!best || m->position(0) < best->first)) {
            best = std::pair{m->position(0), mod};
        }
    }
    if (best) d.modality = best->second;
}

void parse_overrides(const std::string& text, PlanDraft& d) {
    static const std::regex bandwidth(R"((\d+(?:\.\d+)?)\s*mhz\b)", icase);
    if (auto m = search(text, bandwidth)) {
        if (auto i = to_int((*m)[1].str())) {
            d.overrides["bandwidth_mhz"] = *i;
        } else if (auto v = to_double((*m)[1].str())) {
            d.overrides["bandwidth_mhz"] = *v;
        }
    }
    static const std::regex mimo_matrix(R"((\d+)\s*x\s*(\d+)\s*mimo\b)", icase);
    static const std::regex mimo_layers(R"(\bmimo\s*(?:with\s+)?(\d+)\b|(\d+)\s*(?:mimo\s+)?layers?\b)", icase);
    static const std::regex mimo_plain(R"(\bmimo\b)", icase);
    if (auto m = search(text, mimo_matrix)) {
        auto a = to_int((*m)[1].str());
        auto b = to_int((*m)[2].str());
        if (a && b) d.overrides["mimo_layers"] = std::min(*a, *b);
    } else if (auto m2 = search(text, mimo_layers)) {
        auto v = to_int((*m2)[1].matched ? (*m2)[1].str() : (*m2)[2].str());
        if (v) d.overrides["mimo_layers"] = *v;
    } else if (search(text, mimo_plain)) {
        d.overrides["mimo_layers"] = std::int64_t{2};
    }
    static const std::regex attenuation(
        R"(\batten\w*\s*(?:of\s+|at\s+|to\s+)?(\d+(?:\.\d+)?)\s*db\b|(\d+(?:\.\d+)?)\s*db\s*(?:of\s+)?atten)", icase);
    if (auto m = search(text, attenuation)) {
        auto v = to_double((*m)[1].matched ? (*m)[1].str() : (*m)[2].str());
        if (v) d.overrides["attenuation_db"] = *v;
    }
}

void parse_resources(const std::string& text, PlanDraft& d) {
    static const std::regex cpu(
        R"((\d+)\s*(?:cpu\s*cores?|vcpus?|cpus?|cores?)\s*(?:per|each|for\s+each)\s*(?:run|experiment)\b)", icase);
    static const std::regex gpu(R"((\d+)\s*v?gpus?\s*(?:per|each|for\s+each)\s*(?:run|experiment)\b)", icase);
    static const std::regex storage(
        R"((\d+)\s*(gb|tb)\s*(?:of\s+)?(?:storage|disk)?\s*(?:per|each|for\s+each)\s*(?:run|experiment)\b)", icase);
    if (auto m = search(text, cpu)) d.cpu_cores_per_run = to_int((*m)[1].str());
    if (auto m = search(text, gpu)) d.vgpus_per_run = to_int((*m)[1].str());
    if (auto m = search(text, storage)) {
        if (auto v = to_int((*m)[1].str())) d.storage_gb_per_run = lower((*m)[2].str()) == "tb" ? *v * 1000 : *v;
    }

    static const std::regex repeat_n(
        R"((\d+)\s*(?:concurrent\s+|parallel\s+|independent\s+)?(?:times|runs|repetitions)\b|\brepeat(?:ed)?\s+(\d+)\s*(?:times)?\b)",
        icase);
    if (auto m = search(text, repeat_n)) {
        auto v = to_int((*m)[1].matched ? (*m)[1].str() : (*m)[2].str());
        if (v && *v >= 0 && *v <= 1'000'000) d.repetitions = static_cast<int>(*v);
    }
    static const std::regex seed(R"(\bseed\s*(?:=|:|of|is)?\s*(\d+)\b)", icase);
    if (auto m = search(text, seed)) {
        try {
            d.seed = std::stoull((*m)[1].str());
        } catch (const std::exception&) {
        }
    }
}

void parse_app(const std::string& text, const Catalog& catalog, PlanDraft& d) {
    static const std::regex deploy(
        R"(\b(?:deploy|launch|benchmark)\s+(?:the\s+)?(?:app(?:lication)?\s+)?(<?[A-Za-z0-9_.+\-]+>?))", icase);
    std::optional<std::string> candidate;
    if (auto m = search(text, deploy)) candidate = (*m)[1].str();
    if (candidate) {
        if (auto app = catalog.find_app(*candidate)) {
            d.app = *app;
            return;
        }
    }
    for (const auto& w : split_words(text)) {
        if (auto app = catalog.find_app(w)) {
            d.app = *app;
            return;
        }
    }
    if (candidate) d.unknown_app = *candidate;
}

void parse_traffic(const std::string& text, PlanDraft& d) {
    static const std::regex tcp(R"(\btcp\b)", icase);
    static const std::regex udp(R"(\budp\b)", icase);
    if (search(text, tcp)) d.traffic.push_back(TrafficKind::tcp);
    if (search(text, udp)) d.traffic.push_back(TrafficKind::udp);
}

std::string metric_phrase(KpiMetric m) {
    switch (m) {
        case KpiMetric::mean_throughput: return "mean throughput";
        case KpiMetric::p95_latency: return "p95 latency";
        case KpiMetric::mean_cpu_util: return "mean CPU utilization";
    }
    return "KPI";
}

// Re-checks a draft against the catalog, then either builds a plan or asks
// one question per gap.
IntentDecision complete(PlanDraft d, const Catalog& catalog, const PlanDefaults& defaults) {
    IntentDecision out;
    auto ask = [&](std::string field, std::string text) { out.questions.push_back({std::move(field), std::move(text)}); };

    if (d.app) {
        if (auto app = catalog.find_app(*d.app)) {
            d.app = *app;
        } else {
            d.unknown_app = d.app;
            d.app.reset();
        }
    }
    std::vector<std::string> cores;
    for (const auto& c : d.cores) {
        if (const auto* p = catalog.find_core(c)) {
            push_unique(cores, p->core_name);
        } else {
            push_unique(d.unknown_cores, c);
        }
    }
    d.cores = cores;

    if (!d.app) {
        if (d.unknown_app) {
            ask("app_under_test", "Unknown application \"" + *d.unknown_app + "\". Available applications: " +
                                      catalog.app_list() + ".");
        } else {
            ask("app_under_test", "Could not identify application under test. Which application should be deployed "
                                  "(available: " + catalog.app_list() + ")?");
        }
    }
    if (!d.unknown_cores.empty()) {
        std::string names;
        for (const auto& c : d.unknown_cores) names += (names.empty() ? "\"" : ", \"") + c + "\"";
        ask("target_cores", "Unknown core " + names + ". Installed cores: " + catalog.core_list() +
                                ". Which cores should be used instead?");
    } else if (d.cores.empty()) {
        ask("target_cores", "Which 5G core implementations should be used? Installed cores: " + catalog.core_list() + ".");
    }
    if (!d.metric) {
        ask("kpi_metric", "Which KPI should be verified (mean throughput, p95 latency or mean CPU utilization), and "
                          "against which threshold?");
    } else if (!d.threshold) {
        ask("kpi_threshold", "What threshold value and unit should " + metric_phrase(*d.metric) +
                                 " be compared against (e.g. 50 " + std::string(to_string(unit_for(*d.metric))) + ")?");
    } else if (!(*d.threshold > 0)) {
        ask("kpi_threshold", "The threshold for " + metric_phrase(*d.metric) + " must be greater than zero.");
    } else if (d.unit && *d.unit != unit_for(*d.metric)) {
        ask("kpi_threshold", "Threshold unit " + std::string(to_string(*d.unit)) + " does not match " +
                                 metric_phrase(*d.metric) + " (expects " +
                                 std::string(to_string(unit_for(*d.metric))) + "). What is the threshold?");
    }
    const int duration = d.duration_s.value_or(defaults.duration_s);
    const int interval = d.interval_s.value_or(defaults.interval_s);
    if (duration <= 0 || interval <= 0 || interval > duration) {
        ask("duration", "Measurement duration must be positive and at least the sampling interval (got " +
                            std::to_string(duration) + " s every " + std::to_string(interval) + " s). How long should "
                            "the measurement run?");
    }
    if (d.repetitions && *d.repetitions < 1) {
        ask("repetitions", "The number of runs per core must be at least 1. How many runs are needed?");
    }

    if (!out.questions.empty()) {
        out.kind = DecisionKind::clarification_required;
        out.draft = std::move(d);
        return out;
    }

    ExperimentPlan p;
    p.app_under_test = *d.app;
    p.target_cores = d.cores;
    p.kpi.metric = *d.metric;
    p.kpi.threshold = *d.threshold;
    p.kpi.unit = unit_for(*d.metric);
    p.kpi.comparator = d.comparator.value_or(*d.metric == KpiMetric::mean_throughput ? Comparator::exceeds
                                                                                       : Comparator::below);
    p.kpi.traffic_kinds = d.traffic.empty() ? defaults.traffic : d.traffic;
    p.modality = d.modality.value_or(Modality::emulation);
    p.duration_s = duration;
    p.interval_s = interval;
    p.per_run_resources = defaults.per_run_for(p.modality);
    if (d.cpu_cores_per_run) p.per_run_resources.cpu_cores = *d.cpu_cores_per_run;
    if (d.vgpus_per_run) p.per_run_resources.vgpus = *d.vgpus_per_run;
    if (d.storage_gb_per_run) p.per_run_resources.storage_gb = *d.storage_gb_per_run;
    p.template_overrides = d.overrides;
    p.seed = d.seed.value_or(defaults.seed);
    p.repetitions = d.repetitions.value_or(1);

    out.kind = DecisionKind::approved;
    out.plan = std::move(p);
    out.draft = std::move(d);
    return out;
}

bool asks(const IntentDecision& d, std::string_view field) {
    return std::any_of(d.questions.begin(), d.questions.end(), [&](const Question& q) { return q.field == field; });
}

}  // namespace

PlanDraft parse_request(std::string_view text_view, const Catalog& catalog) {
    const std::string text(text_view);
    PlanDraft d;
    parse_app(text, catalog, d);
    auto cores = parse_cores(text, catalog);
    d.cores = std::move(cores.known);
    d.unknown_cores = std::move(cores.unknown);
    parse_kpi(text, d);
    parse_timing(text, d);
    parse_traffic(text, d);
    parse_modality(text, d);
    parse_overrides(text, d);
    parse_resources(text, d);
    return d;
}

IntentDecision interpret(std::string_view request_text, const Catalog& catalog, const PlanDefaults& defaults,
                         IntentModelClient* model) {
    if (model) {
        if (auto draft = model->draft(request_text)) return complete(std::move(*draft), catalog, defaults);
    }
    return complete(parse_request(request_text, catalog), catalog, defaults);
}

IntentDecision merge_clarification(const IntentDecision& previous, std::string_view answer_text,
                                   const Catalog& catalog, const PlanDefaults& defaults) {
    if (previous.kind != DecisionKind::clarification_required) {
        throw StateError("merge_clarification needs a clarification_required decision, got " +
                         std::string(to_string(previous.kind)));
    }
    PlanDraft d = previous.draft;
    const std::string answer(answer_text);
    const PlanDraft a = parse_request(answer, catalog);

    if (asks(previous, "app_under_test") && a.app) {
        d.app = a.app;
        d.unknown_app.reset();
    }
    if (asks(previous, "target_cores")) {
        const auto mentioned = scan_cores(answer, catalog);
        static const std::regex drop(R"(\b(?:drop|remove|without|skip|ignore|exclude)\b)", icase);
        if (!mentioned.empty()) {
            for (const auto& c : mentioned) push_unique(d.cores, c);
            d.unknown_cores = a.unknown_cores;
        } else if (std::regex_search(answer, drop)) {
            d.unknown_cores.clear();
        } else if (!a.unknown_cores.empty()) {
            d.unknown_cores = a.unknown_cores;
        }
    }
    if (asks(previous, "kpi_metric") && a.metric) {
        d.metric = a.metric;
        if (a.comparator) d.comparator = a.comparator;
        if (a.threshold) {
            d.threshold = a.threshold;
            d.unit = a.unit;
        }
    }
    if (asks(previous, "kpi_threshold")) {
        if (a.threshold) {
            d.threshold = a.threshold;
            d.unit = a.unit;
            if (a.comparator) d.comparator = a.comparator;
        } else {
            static const std::regex bare(R"(^\s*(?:threshold\s*(?:of|is|=|:)?\s*)?(\d+(?:\.\d+)?)\s*$)", icase);
            std::smatch m;
            if (std::regex_match(answer, m, bare) && d.metric) {
                d.threshold = to_double(m[1].str());
                d.unit = unit_for(*d.metric);
            }
        }
    }
    if (asks(previous, "duration")) {
        if (a.duration_s) d.duration_s = a.duration_s;
        if (a.interval_s) d.interval_s = a.interval_s;
    }
    if (asks(previous, "repetitions") && a.repetitions) d.repetitions = a.repetitions;

    return complete(std::move(d), catalog, defaults);
}

IntentDecision gate(const ExperimentPlan& plan, const ResourceVector& available, const Policy& policy) {
    IntentDecision out;
    auto deny = [&](std::string reason) {
        out.kind = DecisionKind::denied;
        out.reason = std::move(reason);
        return out;
    };
    const auto runs = plan.runs();
    const auto total = plan.total_demand();
    if (auto axis = total.first_exceeding_axis(available)) {
        const auto i = static_cast<std::size_t>(
            std::find(ResourceVector::axis_names.begin(), ResourceVector::axis_names.end(), *axis) -
            ResourceVector::axis_names.begin());
        return deny("insufficient capacity on " + std::string(*axis) + ": " + std::to_string(runs) + " runs need " +
                    std::to_string(total.axes()[i]) + ", available " + std::to_string(available.axes()[i]));
    }
    if (runs > policy.max_runs_per_request) {
        return deny("policy max_runs_per_request exceeded: " + std::to_string(runs) + " runs > " +
                    std::to_string(policy.max_runs_per_request));
    }
    if (!policy.allowed_modalities.contains(plan.modality)) {
        std::string allowed;
        for (auto m : policy.allowed_modalities) allowed += (allowed.empty() ? "" : ", ") + std::string(to_string(m));
        return deny("modality " + std::string(to_string(plan.modality)) + " not allowed by modality policy (allowed: " +
                    allowed + ")");
    }
    if (auto axis = plan.per_run_resources.first_exceeding_axis(policy.per_run_resource_cap)) {
        return deny("per-run " + std::string(*axis) + " exceeds policy per_run_resource_cap " +
                    policy.per_run_resource_cap.to_string());
    }
    out.kind = DecisionKind::approved;
    out.plan = plan;
    return out;
}

}  // namespace exas
