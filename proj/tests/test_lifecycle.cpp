#include <gtest/gtest.h>

#include <random>

#include "exas/errors.hpp"
#include "exas/lifecycle.hpp"

using namespace exas;

namespace {

using S = ExperimentState;
using E = EventKind;

const Timestamp t0 = parse_rfc3339("2026-10-15T08:00:00Z");

ExperimentRecord fresh() {
    ExperimentRecord r;
    r.experiment_id = "exp-20261015-000001";
    return r;
}

KpiVerdict passing() {
    KpiVerdict v;
    v.overall_pass = true;
    return v;
}

// Allowed (state, event) pairs, written out independently of advance().
bool allowed(S s, E e) {
    switch (e) {
        case E::start: return s == S::queued;
        case E::provisioned: return s == S::provisioning;
        case E::measurement_done: return s == S::running;
        case E::collected: return s == S::collecting;
        case E::torn_down: return s == S::tearing_down;
        case E::fault:
        case E::cancel: return s == S::queued || s == S::provisioning || s == S::running || s == S::collecting;
    }
    return false;
}

}  // namespace

TEST(Lifecycle, HappyPathEndsCompleted) {
    auto r = fresh();
    r = advance(r, {E::start}, t0);
    r = advance(r, {E::provisioned}, t0);
    r = advance(r, {E::measurement_done}, t0);
    r.verdict = passing();
    r = advance(r, {E::collected}, t0);
    EXPECT_EQ(r.state, S::tearing_down);
    r = advance(r, {E::torn_down}, t0);
    EXPECT_EQ(r.state, S::completed);
    ASSERT_TRUE(r.finished_at.has_value());
    EXPECT_EQ(r.log.size(), 5u);
    EXPECT_EQ(r.log.back().phase, "completed");
}

TEST(Lifecycle, FaultRoutesThroughTeardown) {
    auto r = advance(fresh(), {E::start}, t0);
    r = advance(r, LifecycleEvent::fault("provisioning", "gnb-0 crashed"), t0);
    EXPECT_EQ(r.state, S::tearing_down);
    EXPECT_NE(r.log.back().message.find("gnb-0 crashed"), std::string::npos);
    r = advance(r, {E::torn_down}, t0);
    EXPECT_EQ(r.state, S::failed);
    EXPECT_FALSE(r.verdict.has_value());
}

TEST(Lifecycle, TeardownRefusedWhileLeasesHeld) {
    auto r = advance(fresh(), {E::cancel}, t0);
    r.leases = {"lease-1"};
    EXPECT_THROW(advance(r, {E::torn_down}, t0), IllegalTransition);
    r.leases.clear();
    EXPECT_EQ(advance(r, {E::torn_down}, t0).state, S::cancelled);
}

TEST(Lifecycle, CompletionNeedsVerdict) {
    auto r = advance(advance(advance(fresh(), {E::start}, t0), {E::provisioned}, t0), {E::measurement_done}, t0);
    r = advance(r, {E::collected}, t0);
    EXPECT_THROW(advance(r, {E::torn_down}, t0), IllegalTransition);
}

TEST(Lifecycle, TerminalStatesAcceptNothing) {
    auto r = advance(advance(fresh(), {E::cancel}, t0), {E::torn_down}, t0);
    for (auto e : {E::start, E::provisioned, E::measurement_done, E::collected, E::torn_down, E::fault, E::cancel}) {
        try {
            advance(r, {e}, t0);
            FAIL() << to_string(e);
        } catch (const IllegalTransition& ex) {
            EXPECT_NE(std::string(ex.what()).find("cancelled"), std::string::npos);
            EXPECT_NE(std::string(ex.what()).find(to_string(e)), std::string::npos);
        }
    }
}

// Random event sequences: advance either matches the transition table or
// throws, the log grows by exactly one per accepted event, terminal states
// are absorbing and the only way into them is through tearing_down.
TEST(LifecycleProperty, RandomWalksRespectTable) {
    std::mt19937_64 rng(2024);
    const std::vector<E> events{E::start, E::provisioned, E::measurement_done, E::collected,
                                E::torn_down, E::fault, E::cancel};
    for (int walk = 0; walk < 2000; ++walk) {
        auto r = fresh();
        for (int step = 0; step < 12; ++step) {
            const E e = events[rng() % events.size()];
            if (e == E::collected) r.verdict = passing();
            const auto before = r.log.size();
            try {
                auto next = advance(r, {e}, t0);
                ASSERT_TRUE(allowed(r.state, e)) << to_string(r.state) << " " << to_string(e);
                ASSERT_EQ(next.log.size(), before + 1);
                if (is_terminal(next.state)) {
                    ASSERT_EQ(r.state, S::tearing_down);
                }
                r = std::move(next);
            } catch (const IllegalTransition&) {
                ASSERT_TRUE(!allowed(r.state, e) || is_terminal(r.state)) << to_string(r.state) << " " << to_string(e);
            }
        }
    }
}
