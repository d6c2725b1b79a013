// Acceptance run: one PASS/FAIL line per criterion. argv[1] is the exasctl
// binary used for the CLI gate in criterion 1.

#include <httplib.h>
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <mutex>
#include <random>
#include <sstream>
#include <string>

#include "exas/errors.hpp"
#include "exas/hash.hpp"
#include "exas/http_server.hpp"
#include "support.hpp"

using namespace exas;
using namespace std::chrono_literals;
using fixture::Stack;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void check(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

double seconds_since(Clock::time_point t) {
    return std::chrono::duration<double>(Clock::now() - t).count();
}

RequestTicket submit_plan(Stack& s, const ExperimentPlan& plan) {
    return s.scheduler.submit_request(plan, build_run_descriptors(plan, s.config.catalog, utc_now()));
}

std::size_t count_phase(const ExperimentRecord& r, const std::string& phase) {
    return static_cast<std::size_t>(
        std::count_if(r.log.begin(), r.log.end(), [&](const LogEntry& e) { return e.phase == phase; }));
}

std::string exasctl;

// State shared by criteria 1 and 6.
struct PaperRun {
    std::unique_ptr<Stack> stack;
    std::vector<std::string> experiment_ids;
    bool ran = false;
};
PaperRun paper;

void criterion_1(Outcome& o) {
    paper.stack = std::make_unique<Stack>(Stack::fast_config(60.0));
    auto& s = *paper.stack;
    std::mutex m;
    std::size_t peak_leases = 0;
    s.pool.set_observer([&](const PoolSnapshot& p) {
        std::lock_guard lock(m);
        peak_leases = std::max(peak_leases, p.active_leases.size());
    });
    HttpServer server(s.api);
    const int port = server.start("127.0.0.1", 0);
    const auto url = "http://127.0.0.1:" + std::to_string(port);

    const auto t0 = Clock::now();
    httplib::Client client(url);
    auto res = client.Post("/experiments", json{{"user_request", fixture::paper_request}}.dump(), "application/json");
    if (!res || res->status != 202) {
        o.check(false, "submit returned " + (res ? std::to_string(res->status) + " " + res->body : "no response"));
        server.stop();
        return;
    }
    const auto body = json::parse(res->body);
    const auto request_id = body.at("request_id").get<std::string>();
    for (const auto& id : body.at("experiment_ids")) paper.experiment_ids.push_back(id.get<std::string>());

    const auto cmd = exasctl + " --url " + url + " gate " + request_id + " --timeout 60 > /dev/null";
    const int status = std::system(cmd.c_str());
    const int rc = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    const double wall = seconds_since(t0);
    paper.ran = true;

    o.check(paper.experiment_ids.size() == 3, "three experiments");
    o.check(rc == 0, "exasctl gate exit " + std::to_string(rc));
    {
        std::lock_guard lock(m);
        o.check(peak_leases >= 3, "runs held leases concurrently (peak " + std::to_string(peak_leases) + ")");
    }
    double min_mean = 1e300;
    for (const auto& id : paper.experiment_ids) {
        const auto rec = s.scheduler.snapshot(id);
        o.check(rec.state == ExperimentState::completed, id + " completed");
        const auto b = s.repo.lookup(id);
        if (!b || !b->metrics_ref) {
            o.check(false, id + " archived");
            continue;
        }
        const auto archive = json::parse(s.repo.get_object(*b->metrics_ref));
        std::size_t kinds = 0;
        for (const auto& run : archive.at("runs")) {
            ++kinds;
            double sum = 0;
            for (const auto& sample : run.at("samples")) sum += sample.at(1).get<double>();
            const auto n = run.at("samples").size();
            o.check(n == 120, id + " " + run.at("traffic").get<std::string>() + " has " + std::to_string(n) + " samples");
            const double mean = sum / static_cast<double>(n);
            min_mean = std::min(min_mean, mean);
            o.check(mean > 50.0, id + " mean " + std::to_string(mean) + " > 50");
        }
        o.check(kinds == 2, id + " has tcp and udp runs");
    }
    const auto st = s.scheduler.request_status(request_id);
    o.check(st && st->gate_pass(), "request gate pass");
    o.check(wall < 10.0, "wall time < 10 s");
    o.detail << " wall=" << wall << "s exit=" << rc << " min_mean=" << min_mean << "Mbps";
    server.stop();
}

void criterion_2(Outcome& o) {
    // 60x maps each 120 s traffic run to 2 s.
    Stack s(Stack::fast_config(60.0));
    auto single = fixture::paper_plan();
    single.target_cores = {"Open5GS"};
    auto t = Clock::now();
    const auto one = submit_plan(s, single);
    o.check(s.scheduler.wait_request(one.request_id, 60s), "single run finished");
    const double single_wall = seconds_since(t);

    t = Clock::now();
    const auto three = submit_plan(s, fixture::paper_plan());
    o.check(s.scheduler.wait_request(three.request_id, 60s), "three runs finished");
    const double triple_wall = seconds_since(t);
    o.check(s.scheduler.request_status(three.request_id)->gate_pass(), "three runs pass");
    o.check(triple_wall < 2.0 * single_wall, "three-run wall < 2x single-run wall");
    o.detail << " single=" << single_wall << "s three=" << triple_wall << "s ratio=" << triple_wall / single_wall;
}

void criterion_3(Outcome& o) {
    Stack s(Stack::fast_config(3000.0));
    std::atomic<bool> violated{false};
    std::atomic<int> checks{0};
    s.pool.set_observer([&](const PoolSnapshot& p) {
        ++checks;
        if (!p.leased.fits_within(p.capacity)) violated = true;
    });
    std::mt19937_64 rng(20261015);
    const std::vector<std::string> cores{"Open5GS", "Free5GC", "OAI-CN", "Cumucore"};
    int admitted = 0, rejected = 0;
    for (int i = 0; i < 50; ++i) {
        auto plan = fixture::paper_plan();
        plan.target_cores = {cores[rng() % cores.size()]};
        plan.repetitions = 1 + static_cast<int>(rng() % 4);
        plan.modality = rng() % 5 == 0 ? Modality::in_lab : Modality::emulation;
        plan.per_run_resources = {static_cast<std::int64_t>(1 + rng() % 64), static_cast<std::int64_t>(rng() % 4),
                                  static_cast<std::int64_t>(1 + rng() % 10000),
                                  plan.modality == Modality::in_lab ? static_cast<std::int64_t>(1 + rng() % 2) : 0};
        plan.seed = rng();
        try {
            submit_plan(s, plan);
            ++admitted;
        } catch (const AdmissionError&) {
            ++rejected;
        }
    }
    o.check(s.scheduler.wait_idle(120s), "all experiments terminal");
    std::size_t terminal = 0, total = 0;
    for (const auto& r : s.scheduler.snapshots()) {
        ++total;
        terminal += is_terminal(r.state);
        o.check(r.leases.empty(), r.experiment_id + " holds no leases");
    }
    const auto snap = s.pool.snapshot();
    o.check(!violated, "leased <= capacity on every event");
    o.check(terminal == total, "every experiment terminal");
    o.check(snap.active_leases.empty() && snap.leased == ResourceVector{}, "zero residual leases");
    o.detail << " submissions=50 admitted=" << admitted << " rejected=" << rejected << " experiments=" << total
             << " pool_events=" << checks.load();
}

void criterion_4(Outcome& o) {
    Stack s(Stack::fast_config(20000.0));
    auto plan = fixture::paper_plan();
    plan.target_cores = {"OAI-CN"};
    const auto d = build_run_descriptors(plan, s.config.catalog, utc_now());
    auto run = [&](const std::vector<ExperimentDescriptor>& ds) {
        const auto t = s.scheduler.submit_request(plan, ds);
        s.scheduler.wait_request(t.request_id, 60s);
        const auto b = s.repo.lookup(t.experiment_ids.front());
        return b && b->metrics_ref ? *b->metrics_ref : std::string("missing");
    };
    const auto a = run(d);
    const auto b = run(d);
    plan.seed += 1;
    const auto c = run(build_run_descriptors(plan, s.config.catalog, utc_now()));
    const bool bytes_equal = a != "missing" && b != "missing" && s.repo.get_object(a) == s.repo.get_object(b);
    o.check(a == b && bytes_equal, "same descriptor gives identical archive");
    o.check(c != a && c != "missing", "new seed gives a different archive");
    o.detail << " run1=" << a.substr(0, 12) << " run2=" << b.substr(0, 12) << " seed+1=" << c.substr(0, 12);
}

void criterion_5(Outcome& o) {
    Stack s;
    const auto approved = s.api.handle_submit(json{{"user_request", fixture::paper_request}}.dump());
    o.check(approved.status == 202 && approved.body.value("decision", "") == "approved", "approved");

    const auto ask = s.api.handle_submit(
        json{{"user_request", "Deploy iperf3 across Open5GS and verify mean throughput"}}.dump());
    const bool asked = ask.body.value("decision", "") == "clarification_required" &&
                       ask.body.at("questions").at(0).at("field") == "kpi_threshold";
    o.check(asked, "missing threshold asks kpi_threshold");
    if (asked) {
        const auto resolved = s.api.handle_clarify(ask.body.at("clarification_token").get<std::string>(),
                                                   json{{"answer", "threshold 50 Mbps"}}.dump());
        o.check(resolved.status == 202 && resolved.body.value("decision", "") == "approved", "clarify -> approved");
    }

    const auto denied = s.api.handle_submit(
        json{{"user_request",
              "Deploy iperf3 on Open5GS 200 concurrent runs with 16 cpu cores per run and verify mean throughput "
              "exceeds 50 Mbps"}}
            .dump());
    const auto reason = denied.body.value("reason", "");
    o.check(denied.body.value("decision", "") == "denied" && reason.find("cpu_cores") != std::string::npos,
            "capacity denial names cpu_cores");
    o.detail << " denied_reason=\"" << reason << "\"";
    s.scheduler.wait_idle(60s);
}

void criterion_6(Outcome& o) {
    if (!paper.ran) {
        o.check(false, "criterion 1 did not run");
        return;
    }
    auto& repo = paper.stack->repo;
    for (const auto& id : paper.experiment_ids) {
        const auto b = repo.lookup(id);
        o.check(b.has_value(), id + " indexed");
        if (!b) continue;
        bool resolves = b->metrics_ref.has_value();
        for (const auto* ref : {&b->descriptor_ref, &b->log_ref}) resolves = resolves && repo.has_object(*ref);
        resolves = resolves && repo.has_object(*b->metrics_ref);
        o.check(resolves, id + " resolves descriptor, log and metrics");
        if (resolves) {
            const auto d = parse_descriptor(repo.get_object(b->descriptor_ref));
            const auto log = json::parse(repo.get_object(b->log_ref));
            o.check(log.at("experiment_id") == id, id + " log names its experiment");
            o.check(json::parse(repo.get_object(*b->metrics_ref)).at("descriptor_id") == d.descriptor_id,
                    id + " metrics name its descriptor");
        }
    }
    QueryFilter f;
    f.core_name = "Free5GC";
    const auto hits = repo.query(f);
    o.check(hits.size() == 1, "core_name=Free5GC returns one bundle (got " + std::to_string(hits.size()) + ")");
    const auto audit = repo.audit();
    o.check(audit.dangling.empty(), "no dangling refs");
    o.check(audit.corrupt.empty(), "no corrupt objects");
    o.detail << " bundles=" << paper.experiment_ids.size() << " free5gc_hits=" << hits.size()
             << " dangling=" << audit.dangling.size();
}

// Direct recomputation from the raw values.
struct Brute {
    long double mean, std, min, max, q1, median, q3;
};

long double depth_value(const std::vector<double>& sorted, long double depth) {
    const auto lo = static_cast<std::size_t>(std::floor(depth));
    const auto hi = static_cast<std::size_t>(std::ceil(depth));
    return (static_cast<long double>(sorted[lo - 1]) + sorted[hi - 1]) / 2.0L;
}

Brute brute(std::vector<double> v) {
    Brute b{};
    const auto n = static_cast<long double>(v.size());
    long double sum = 0;
    for (double x : v) sum += x;
    b.mean = sum / n;
    long double sq = 0;
    for (double x : v) sq += (x - b.mean) * (x - b.mean);
    b.std = std::sqrt(sq / n);
    std::sort(v.begin(), v.end());
    const std::vector<double> rev(v.rbegin(), v.rend());
    b.min = v.front();
    b.max = v.back();
    const long double dm = (n + 1) / 2.0L;
    const long double dh = (std::floor(dm) + 1) / 2.0L;
    b.median = depth_value(v, dm);
    b.q1 = depth_value(v, dh);
    b.q3 = depth_value(rev, dh);
    return b;
}

void criterion_7(Outcome& o) {
    std::mt19937_64 rng(7);
    long double worst = 0;
    for (int i = 0; i < 1000; ++i) {
        ThroughputTrace t;
        t.experiment_id = "exp-acceptance";
        t.core_name = "Open5GS";
        const auto n = 1 + rng() % 240;
        std::normal_distribution<double> dist(20.0 + static_cast<double>(rng() % 100), 1.0 + static_cast<double>(rng() % 15));
        std::vector<double> values;
        for (std::size_t k = 0; k < n; ++k) {
            const double x = std::max(0.0, dist(rng));
            values.push_back(x);
            t.samples.push_back({static_cast<double>(k), x, 0.0, 0.0});
        }
        const auto s = summarize(t);
        const auto b = brute(values);
        for (auto [got, want] : {std::pair{s.mean, b.mean}, {s.std, b.std}, {s.min, b.min}, {s.max, b.max},
                                 {s.q1, b.q1}, {s.median, b.median}, {s.q3, b.q3}}) {
            const long double rel = std::fabs(got - want) / std::max(1.0L, std::fabs(want));
            worst = std::max(worst, rel);
        }
        if (s.count != n) o.check(false, "count");
    }
    o.check(worst <= 1e-9L, "max relative error <= 1e-9");

    ThroughputTrace edge;
    edge.experiment_id = "exp-acceptance";
    edge.core_name = "Open5GS";
    for (int k = 0; k < 120; ++k) edge.samples.push_back({static_cast<double>(k), 50.0, 0.0, 0.0});
    KpiCriterion c;
    c.threshold = 50.0;
    const std::vector<RunKey> keys{{"Open5GS", TrafficKind::tcp}};
    const auto v = evaluate_kpi({{keys[0], summarize(edge)}}, c, keys);
    o.check(!v.overall_pass && !v.per_run.at(keys[0]).pass, "mean == threshold fails under exceeds");
    o.detail << " traces=1000 max_rel_err=" << static_cast<double>(worst);
}

void criterion_8(Outcome& o) {
    DriverOptions opts;
    opts.time_scale = 1e6;
    SimOtaDriver ota(opts);
    ResourcePool pool("lab", {3000, 30, 500000, 4});
    auto plan = fixture::paper_plan();
    plan.target_cores = {"Open5GS"};
    plan.modality = Modality::in_lab;
    plan.per_run_resources = {8, 0, 20, 2};
    plan.template_overrides = {{"ota_jitter_std_mbps", 0.0}};
    const auto d = build_run_descriptors(plan, Catalog::defaults(), utc_now()).front();
    const auto lease = pool.allocate("exp-acceptance", plan.per_run_resources);
    auto h = ota.provision(d, lease);
    double prev = std::numeric_limits<double>::infinity();
    int violations = 0;
    double at30 = 0;
    for (int att = 0; att <= 120; ++att) {
        ota.set_attenuation(*h, att);
        const auto trace = ota.run_measurement(*h, TrafficKind::tcp, 10, 1);
        double sum = 0;
        for (const auto& s : trace.samples) sum += s.mbps;
        const double mean = sum / static_cast<double>(trace.samples.size());
        if (mean > prev) ++violations;
        prev = mean;
        if (att == 30) at30 = mean;
    }
    ota.teardown(*h);
    pool.release(lease.lease_id);
    o.check(violations == 0, "mean throughput non-increasing over 0..120 dB");
    const double point = channel_throughput({100.0, 30.0, 30.0, 1});
    o.check(std::fabs(point - 100.0) <= 1e-6, "channel(100 MHz, 30 dB, 30 dB, 1) = 100");
    o.check(std::fabs(at30 - 100.0) <= 1e-6, "measured mean at 30 dB = 100");
    o.detail << " steps=121 violations=" << violations << " at_30dB=" << at30 << " at_120dB=" << prev;
}

void criterion_9(Outcome& o) {
    auto cfg = Stack::fast_config(20000.0);
    cfg.drivers.faults = {{"Free5GC", NodeRole::gnb}};
    Stack s(cfg);
    const auto t = submit_plan(s, fixture::paper_plan());
    o.check(s.scheduler.wait_request(t.request_id, 60s), "request terminal");
    const auto st = *s.scheduler.request_status(t.request_id);
    std::size_t failed = 0, completed = 0;
    for (const auto& r : st.experiments) {
        const bool faulty = r.plan.target_cores.front() == "Free5GC";
        o.check(r.state == (faulty ? ExperimentState::failed : ExperimentState::completed), r.experiment_id + " state");
        o.check(count_phase(r, "teardown") == 1, r.experiment_id + " torn down exactly once");
        o.check(r.leases.empty(), r.experiment_id + " leases released");
        failed += r.state == ExperimentState::failed;
        completed += r.state == ExperimentState::completed;
    }
    o.check(s.pool.snapshot().active_leases.empty(), "pool has no leases");
    o.check(s.drivers.live_components() == 0, "no live simulated components");
    o.check(st.verdict && st.verdict->partial, "verdict partial");
    o.check(!st.gate_pass(), "gate does not pass a partial verdict");
    o.detail << " failed=" << failed << " completed=" << completed
             << " partial=" << (st.verdict && st.verdict->partial);
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: acceptance <path-to-exasctl>\n";
        return 2;
    }
    exasctl = argv[1];
    const std::vector<std::pair<int, std::function<void(Outcome&)>>> criteria{
        {1, criterion_1}, {2, criterion_2}, {3, criterion_3}, {4, criterion_4}, {5, criterion_5},
        {6, criterion_6}, {7, criterion_7}, {8, criterion_8}, {9, criterion_9}};
    int failures = 0;
    for (const auto& [n, fn] : criteria) {
        Outcome o;
        try {
            fn(o);
        } catch (const std::exception& e) {
            o.check(false, std::string("exception: ") + e.what());
        }
        std::cout << "criterion " << n << ": " << (o.pass ? "PASS" : "FAIL") << o.detail.str() << std::endl;
        failures += !o.pass;
    }
    paper.stack.reset();
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
