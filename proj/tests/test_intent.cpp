#include <gtest/gtest.h>

#include <random>

#include "exas/catalog.hpp"
#include "exas/errors.hpp"
#include "exas/intent.hpp"
#include "support.hpp"

using namespace exas;

namespace {

const Catalog catalog = Catalog::defaults();
const PlanDefaults defaults;
const ResourceVector lab_capacity{3000, 30, 500000, 4};

bool asks_for(const IntentDecision& d, const std::string& field) {
    for (const auto& q : d.questions) {
        if (q.field == field) return true;
    }
    return false;
}

// Exactly one of plan / questions / reason, matching kind.
void expect_shape(const IntentDecision& d) {
    switch (d.kind) {
        case DecisionKind::approved:
            EXPECT_TRUE(d.plan.has_value());
            EXPECT_TRUE(d.questions.empty());
            EXPECT_TRUE(d.reason.empty());
            break;
        case DecisionKind::clarification_required:
            EXPECT_FALSE(d.plan.has_value());
            EXPECT_FALSE(d.questions.empty());
            EXPECT_TRUE(d.reason.empty());
            break;
        case DecisionKind::denied:
            EXPECT_FALSE(d.plan.has_value());
            EXPECT_TRUE(d.questions.empty());
            EXPECT_FALSE(d.reason.empty());
            break;
    }
}

}  // namespace

TEST(Interpret, PaperRequestYieldsThreeCorePlan) {
    const auto d = interpret(fixture::paper_request, catalog, defaults);
    expect_shape(d);
    ASSERT_EQ(d.kind, DecisionKind::approved);
    const auto& p = *d.plan;
    EXPECT_EQ(p.app_under_test, "iperf3");
    EXPECT_EQ(p.target_cores, (std::vector<std::string>{"Open5GS", "Free5GC", "OAI-CN"}));
    EXPECT_EQ(p.kpi.metric, KpiMetric::mean_throughput);
    EXPECT_EQ(p.kpi.comparator, Comparator::exceeds);
    EXPECT_DOUBLE_EQ(p.kpi.threshold, 50.0);
    EXPECT_EQ(p.kpi.unit, Unit::mbps);
    EXPECT_EQ(p.duration_s, 120);
    EXPECT_EQ(p.interval_s, 1);
    EXPECT_EQ(p.kpi.traffic_kinds, (std::vector<TrafficKind>{TrafficKind::tcp, TrafficKind::udp}));
    EXPECT_EQ(p.modality, Modality::emulation);
    EXPECT_EQ(p.per_run_resources, (ResourceVector{8, 0, 20, 0}));
    EXPECT_EQ(p.runs(), 3);
}

TEST(Interpret, UnknownCoreAsksWithCatalog) {
    const auto d = interpret(
        "Deploy iperf3 across three 5G cores (Open5GS, NokiaCN, OAI-CN) and verify mean throughput exceeds 50 Mbps",
        catalog, defaults);
    expect_shape(d);
    ASSERT_EQ(d.kind, DecisionKind::clarification_required);
    ASSERT_TRUE(asks_for(d, "target_cores"));
    const auto& text = d.questions.front().text;
    EXPECT_NE(text.find("\"NokiaCN\""), std::string::npos);
    for (const auto& [name, _] : catalog.cores) EXPECT_NE(text.find(name), std::string::npos) << name;
}

TEST(Interpret, MissingThresholdAsksValueAndUnit) {
    const auto d = interpret("Deploy iperf3 across Open5GS and verify mean throughput", catalog, defaults);
    expect_shape(d);
    ASSERT_EQ(d.kind, DecisionKind::clarification_required);
    ASSERT_EQ(d.questions.size(), 1u);
    EXPECT_EQ(d.questions[0].field, "kpi_threshold");
    EXPECT_NE(d.questions[0].text.find("threshold"), std::string::npos);
    EXPECT_NE(d.questions[0].text.find("unit"), std::string::npos);
}

TEST(Interpret, GibberishAsksForApplication) {
    const auto d = interpret("hello there", catalog, defaults);
    ASSERT_EQ(d.kind, DecisionKind::clarification_required);
    ASSERT_FALSE(d.questions.empty());
    EXPECT_EQ(d.questions[0].field, "app_under_test");
    EXPECT_NE(d.questions[0].text.find("Could not identify application under test"), std::string::npos);
}

TEST(Interpret, FreeOrderClausesAndUnits) {
    const auto d = interpret(
        "Verify that p95 latency stays below 20 ms over udp for 60 seconds every 2 seconds; deploy iperf3 on "
        "free5gc and cumucore",
        catalog, defaults);
    ASSERT_EQ(d.kind, DecisionKind::approved);
    const auto& p = *d.plan;
    EXPECT_EQ(p.target_cores, (std::vector<std::string>{"Free5GC", "Cumucore"}));
    EXPECT_EQ(p.kpi.metric, KpiMetric::p95_latency);
    EXPECT_EQ(p.kpi.comparator, Comparator::below);
    EXPECT_EQ(p.kpi.unit, Unit::ms);
    EXPECT_EQ(p.kpi.traffic_kinds, (std::vector<TrafficKind>{TrafficKind::udp}));
    EXPECT_EQ(p.duration_s, 60);
    EXPECT_EQ(p.interval_s, 2);
}

TEST(Interpret, GbpsIsConvertedToMbps) {
    const auto d = interpret("Deploy iperf3 across Open5GS and verify mean throughput exceeds 1.5 Gbps", catalog,
                             defaults);
    ASSERT_EQ(d.kind, DecisionKind::approved);
    EXPECT_DOUBLE_EQ(d.plan->kpi.threshold, 1500.0);
}

TEST(Interpret, ModelClientDraftIsRechecked) {
    struct FakeModel : IntentModelClient {
        std::optional<PlanDraft> draft(std::string_view) override {
            PlanDraft d;
            d.app = "IPERF3";
            d.cores = {"open5gs", "MadeUpCore"};
            d.metric = KpiMetric::mean_throughput;
            d.threshold = 50.0;
            return d;
        }
    } model;
    const auto d = interpret("whatever", catalog, defaults, &model);
    ASSERT_EQ(d.kind, DecisionKind::clarification_required);
    EXPECT_TRUE(asks_for(d, "target_cores"));
    EXPECT_EQ(d.draft.cores, (std::vector<std::string>{"Open5GS"}));
}

TEST(Merge, ThresholdAnswerApproves) {
    const auto first = interpret("Deploy iperf3 across Open5GS and verify mean throughput", catalog, defaults);
    const auto second = merge_clarification(first, "threshold 50 Mbps", catalog, defaults);
    ASSERT_EQ(second.kind, DecisionKind::approved);
    EXPECT_DOUBLE_EQ(second.plan->kpi.threshold, 50.0);
    EXPECT_EQ(second.plan->kpi.unit, Unit::mbps);
}

TEST(Merge, IrrelevantAnswerRepeatsQuestion) {
    const auto first = interpret("Deploy iperf3 across Open5GS and verify mean throughput", catalog, defaults);
    const auto second = merge_clarification(first, "hello", catalog, defaults);
    ASSERT_EQ(second.kind, DecisionKind::clarification_required);
    ASSERT_EQ(second.questions.size(), first.questions.size());
    EXPECT_EQ(second.questions[0].text, first.questions[0].text);
}

TEST(Merge, PartialAnswerLeavesOneQuestion) {
    const auto first = interpret("Deploy iperf3 and verify mean throughput", catalog, defaults);
    ASSERT_EQ(first.questions.size(), 2u);
    const auto second = merge_clarification(first, "use Free5GC", catalog, defaults);
    ASSERT_EQ(second.kind, DecisionKind::clarification_required);
    ASSERT_EQ(second.questions.size(), 1u);
    EXPECT_EQ(second.questions[0].field, "kpi_threshold");
    const auto third = merge_clarification(second, "50", catalog, defaults);
    ASSERT_EQ(third.kind, DecisionKind::approved);
    EXPECT_EQ(third.plan->target_cores, (std::vector<std::string>{"Free5GC"}));
}

TEST(Merge, RequiresPendingClarification) {
    const auto approved = interpret(fixture::paper_request, catalog, defaults);
    EXPECT_THROW(merge_clarification(approved, "50 Mbps", catalog, defaults), StateError);
}

TEST(Gate, PaperPlanFitsLab) {
    const auto plan = *interpret(fixture::paper_request, catalog, defaults).plan;
    const auto d = gate(plan, lab_capacity, Policy{});
    expect_shape(d);
    EXPECT_EQ(d.kind, DecisionKind::approved);
    EXPECT_EQ(d.plan->target_cores, plan.target_cores);
}

TEST(Gate, TwoHundredRunsOfSixteenCoresDenied) {
    const auto d = interpret(
        "Deploy iperf3 on Open5GS 200 concurrent runs with 16 cpu cores per run and verify mean throughput exceeds "
        "50 Mbps",
        catalog, defaults);
    ASSERT_EQ(d.kind, DecisionKind::approved);
    EXPECT_EQ(d.plan->runs(), 200);
    EXPECT_EQ(d.plan->total_demand().cpu_cores, 3200);
    const auto g = gate(*d.plan, lab_capacity, Policy{});
    expect_shape(g);
    ASSERT_EQ(g.kind, DecisionKind::denied);
    EXPECT_NE(g.reason.find("cpu_cores"), std::string::npos);
}

TEST(Gate, OutdoorsDeniedByModalityPolicy) {
    auto plan = fixture::paper_plan();
    plan.modality = Modality::outdoors;
    const auto g = gate(plan, lab_capacity, Policy{});
    ASSERT_EQ(g.kind, DecisionKind::denied);
    EXPECT_NE(g.reason.find("modality policy"), std::string::npos);
}

TEST(Gate, RunsAndPerRunCap) {
    auto plan = fixture::paper_plan();
    plan.per_run_resources = {1, 0, 1, 0};
    plan.repetitions = 100;
    EXPECT_NE(gate(plan, lab_capacity, Policy{}).reason.find("max_runs_per_request"), std::string::npos);
    plan.repetitions = 1;
    plan.per_run_resources = {65, 0, 1, 0};
    EXPECT_NE(gate(plan, lab_capacity, Policy{}).reason.find("per_run_resource_cap"), std::string::npos);
}

TEST(GateProperty, MonotoneInAvailableCapacity) {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<std::int64_t> small(0, 40);
    for (int i = 0; i < 3000; ++i) {
        auto plan = fixture::paper_plan();
        plan.per_run_resources = {1 + small(rng), small(rng) % 3, small(rng), small(rng) % 2};
        plan.repetitions = 1 + static_cast<int>(small(rng) % 5);
        const ResourceVector a{small(rng) * 10, small(rng), small(rng) * 20, small(rng) % 5};
        const ResourceVector extra{small(rng), small(rng), small(rng), small(rng) % 3};
        if (gate(plan, a, Policy{}).kind == DecisionKind::approved) {
            ASSERT_EQ(gate(plan, a + extra, Policy{}).kind, DecisionKind::approved) << i;
        }
    }
}

TEST(InterpretProperty, DeterministicAndTrichotomous) {
    std::mt19937_64 rng(1234);
    const std::vector<std::string> fragments = {
        "Deploy", "iperf3", "across", "Open5GS", "Free5GC", "OAI-CN", "Cumucore", "NokiaCN", "(", ")", ",", "and",
        "verify", "mean", "throughput", "exceeds", "below", "50", "Mbps", "ms", "p95", "latency", "cpu", "for",
        "120", "seconds", "every", "2", "tcp", "udp", "in-lab", "outdoors", "200", "runs", "16", "cores", "per",
        "run", "threshold", "0", "-3", "1e9", "Gbps", "%", "seed", "=", "mimo", "4x4", "attenuation", "30", "dB",
        "\xff", "\"", "{", "}", "\n", "deploy <my_app>", "all"};
    for (int i = 0; i < 3000; ++i) {
        std::string text;
        const int n = static_cast<int>(rng() % 25);
        for (int k = 0; k < n; ++k) text += fragments[rng() % fragments.size()] + (rng() % 3 ? " " : "");
        IntentDecision a, b;
        ASSERT_NO_THROW(a = interpret(text, catalog, defaults)) << text;
        b = interpret(text, catalog, defaults);
        ASSERT_EQ(a.kind, b.kind) << text;
        ASSERT_NE(a.kind, DecisionKind::denied) << text;
        if (a.kind == DecisionKind::approved) {
            ASSERT_EQ(nlohmann::json(*a.plan).dump(), nlohmann::json(*b.plan).dump()) << text;
            ASSERT_NO_THROW(a.plan->kpi.check()) << text;
            const auto g = gate(*a.plan, lab_capacity, Policy{});
            ASSERT_TRUE(g.kind == DecisionKind::approved || g.kind == DecisionKind::denied);
        } else {
            ASSERT_FALSE(a.questions.empty()) << text;
        }
    }
}

TEST(MergeProperty, AnsweringEveryQuestionConverges) {
    // Each gap paired with an answer that fills it.
    const std::map<std::string, std::string> answers{{"app_under_test", "iperf3"},
                                                     {"target_cores", "Open5GS"},
                                                     {"kpi_metric", "mean throughput exceeds 40 Mbps"},
                                                     {"kpi_threshold", "40 Mbps"},
                                                     {"duration", "for 60 seconds every 1 second"}};
    const std::vector<std::string> requests = {
        "hello", "Deploy iperf3", "verify mean throughput", "Deploy iperf3 across NokiaCN",
        "Deploy iperf3 across Open5GS", "Deploy something across Free5GC and verify mean throughput exceeds 10 Mbps",
        "Deploy iperf3 across Open5GS and verify mean throughput exceeds 50 Mbps for 1 second every 5 seconds"};
    for (const auto& r : requests) {
        auto d = interpret(r, catalog, defaults);
        const auto budget = d.questions.size();
        std::size_t steps = 0;
        while (d.kind == DecisionKind::clarification_required) {
            ASSERT_LT(steps, budget) << r;
            ASSERT_TRUE(answers.contains(d.questions.front().field)) << d.questions.front().field;
            d = merge_clarification(d, answers.at(d.questions.front().field), catalog, defaults);
            ++steps;
        }
        EXPECT_EQ(d.kind, DecisionKind::approved) << r;
    }
}
