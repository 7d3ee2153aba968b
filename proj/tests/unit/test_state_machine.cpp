#include <doctest.h>

#include <cmath>
#include <sstream>

#include "wifilab/corpus_gen.hpp"
#include "wifilab/rng.hpp"
#include "wifilab/state_machine.hpp"

using namespace wifilab;

namespace {

ScenarioConfig lossless(bool encrypted) {
    ScenarioConfig cfg;
    cfg.encrypted = encrypted;
    cfg.phase_latency.scan = LatencyDist::constant(300);
    cfg.phase_latency.assoc = LatencyDist::constant(50);
    cfg.phase_latency.auth = LatencyDist::constant(80);
    cfg.phase_latency.dhcp = LatencyDist::constant(900);
    return cfg;
}

}  // namespace

TEST_CASE("eap overhead formula") {
    CHECK(eap_overhead_ms({4, 10, 5}) == 125);
    CHECK(eap_overhead_ms({0, 1234, 7}) == 7);
    CHECK(eap_overhead_ms({4, 0, 0}) == 0);

    std::mt19937_64 rng = make_rng(31);
    for (int i = 0; i < 2000; ++i) {
        EapParams p{static_cast<int>(uniform_int(rng, 0, 12)), uniform_int(rng, 0, 500),
                    uniform_int(rng, 0, 500)};
        // reference computed term by term
        std::int64_t expected = 0;
        for (int r = 0; r < p.n_e; ++r) expected += 2 * (p.t_w_ms + p.t_a_ms);
        expected += p.t_a_ms;
        CHECK(eap_overhead_ms(p) == expected);
    }
}

TEST_CASE("lossless open-AP attempt walks straight through") {
    auto res = run_attempt(lossless(false));
    CHECK(res.attempt.outcome == Outcome::Success);
    REQUIRE(res.trace.transitions.size() == 3);
    CHECK(res.trace.transitions[0].from == ConnState::Scanning);
    CHECK(res.trace.transitions[0].to == ConnState::Associating);
    CHECK(res.trace.transitions[1].to == ConnState::ObtainingIp);
    CHECK(res.trace.transitions[2].to == ConnState::Connected);
    for (const auto& t : res.trace.transitions) {
        CHECK(t.from != ConnState::Disconnected);
        CHECK(t.to != ConnState::Disconnected);
        CHECK(t.to != ConnState::Authenticating);
    }
    CHECK(res.attempt.phases->auth_ms == 0);
    CHECK(res.attempt.phases->total() == *res.attempt.connection_time_ms);
    CHECK(*res.attempt.connection_time_ms == 300 + 50 + 900);
    CHECK_FALSE(validate(res.trace).has_value());
}

TEST_CASE("encrypted attempts pass through Authenticating") {
    auto res = run_attempt(lossless(true));
    REQUIRE(res.trace.transitions.size() == 4);
    CHECK(res.trace.transitions[1].to == ConnState::Authenticating);
    CHECK(res.attempt.phases->auth_ms == 80);
    CHECK(res.attempt.phases->total() == *res.attempt.connection_time_ms);
}

TEST_CASE("certain probe loss times out alternating through Disconnected") {
    ScenarioConfig cfg = lossless(false);
    cfg.p_loss_probe = 1.0;
    auto res = run_attempt(cfg);
    CHECK(res.attempt.outcome == Outcome::Timeout);
    CHECK_FALSE(res.attempt.connection_time_ms.has_value());
    REQUIRE(!res.trace.transitions.empty());
    for (const auto& t : res.trace.transitions) {
        const bool out = t.from == ConnState::Scanning && t.to == ConnState::Disconnected;
        const bool back = t.from == ConnState::Disconnected && t.to == ConnState::Scanning;
        CHECK((out || back));
    }
    CHECK(res.attempt.phases->total() == cfg.timeout_ms);
    CHECK(res.attempt.phases->assoc_ms == 0);
    CHECK_FALSE(validate(res.trace).has_value());
}

TEST_CASE("certain dhcp loss ends as DhcpFailure after in-place retries") {
    ScenarioConfig cfg = lossless(false);
    cfg.p_loss_dhcp = 1.0;
    auto res = run_attempt(cfg);
    CHECK(res.attempt.outcome == Outcome::DhcpFailure);
    CHECK(res.attempt.phases->total() == cfg.timeout_ms);
    // no transition may leave ObtainingIp except the terminal close-out
    const auto& last = res.trace.transitions.back();
    CHECK(last.from == ConnState::ObtainingIp);
    CHECK(last.to == ConnState::Disconnected);
    CHECK(last.at_ms == cfg.timeout_ms);
}

TEST_CASE("probe loss 0.5 re-enters Scanning twice on average") {
    ScenarioConfig cfg = lossless(false);
    cfg.p_loss_probe = 0.5;
    cfg.phase_latency.scan = LatencyDist::constant(10);

    const int n = 10000;
    double total_entries = 0;
    for (int i = 0; i < n; ++i) {
        cfg.rng_seed = derive_seed(404, static_cast<std::uint64_t>(i));
        auto res = run_attempt(cfg);
        REQUIRE(res.attempt.outcome == Outcome::Success);
        int entries = 1;  // initial entry is not a transition
        for (const auto& t : res.trace.transitions) {
            if (t.to == ConnState::Scanning) ++entries;
        }
        total_entries += entries;
    }
    // geometric(p=0.5) round count: mean 2, var 2, 95% CI at n=10000
    const double mean = total_entries / n;
    const double half_width = 1.96 * std::sqrt(2.0 / n);
    CHECK(mean > 2.0 - half_width);
    CHECK(mean < 2.0 + half_width);
}

TEST_CASE("attempts are deterministic in the seed") {
    ScenarioConfig cfg = lossless(true);
    cfg.p_loss_probe = 0.3;
    cfg.p_loss_assoc = 0.2;
    cfg.p_loss_dhcp = 0.4;
    cfg.rng_seed = 2024;
    auto a = run_attempt(cfg);
    auto b = run_attempt(cfg);
    CHECK(a.attempt == b.attempt);
    CHECK(a.trace == b.trace);
}

TEST_CASE("phase sums equal the success time under mixed loss") {
    ScenarioConfig cfg = lossless(true);
    cfg.p_loss_probe = 0.25;
    cfg.p_loss_assoc = 0.15;
    cfg.p_loss_auth = 0.1;
    cfg.p_loss_dhcp = 0.3;
    int successes = 0;
    for (int i = 0; i < 1500; ++i) {
        cfg.rng_seed = derive_seed(88, static_cast<std::uint64_t>(i));
        auto res = run_attempt(cfg);
        CHECK_FALSE(validate(res.trace).has_value());
        REQUIRE(res.attempt.phases.has_value());
        if (res.attempt.outcome == Outcome::Success) {
            ++successes;
            CHECK(res.attempt.phases->total() == *res.attempt.connection_time_ms);
        } else {
            CHECK(res.attempt.phases->total() == cfg.timeout_ms);
        }
        CHECK_FALSE(validate(res.attempt).has_value());
    }
    CHECK(successes > 0);
}

TEST_CASE("zero loss means no Disconnected whenever latency beats the timeout") {
    std::mt19937_64 seeds = make_rng(5150);
    for (int i = 0; i < 300; ++i) {
        ScenarioConfig cfg;
        cfg.encrypted = (i % 2) == 0;
        cfg.phase_latency.scan = LatencyDist::log_normal(400, 0.5);
        cfg.phase_latency.assoc = LatencyDist::log_normal(60, 0.5);
        cfg.phase_latency.auth = LatencyDist::log_normal(70, 0.5);
        cfg.phase_latency.dhcp = LatencyDist::log_normal(1100, 0.5);
        cfg.rng_seed = seeds();
        auto res = run_attempt(cfg);
        if (res.attempt.outcome == Outcome::Success) {
            for (const auto& t : res.trace.transitions) {
                CHECK(t.to != ConnState::Disconnected);
            }
        }
    }
}

TEST_CASE("enterprise overhead shifts auth time by exactly the formula") {
    ScenarioConfig cfg = lossless(true);
    cfg.rng_seed = 9001;
    auto plain = run_attempt(cfg);
    cfg.enterprise = EapParams{4, 10, 5};
    auto eap = run_attempt(cfg);

    CHECK(eap.attempt.phases->scan_ms == plain.attempt.phases->scan_ms);
    CHECK(eap.attempt.phases->assoc_ms == plain.attempt.phases->assoc_ms);
    CHECK(eap.attempt.phases->dhcp_ms == plain.attempt.phases->dhcp_ms);
    CHECK(eap.attempt.phases->auth_ms - plain.attempt.phases->auth_ms == 125);
    CHECK(*eap.attempt.connection_time_ms - *plain.attempt.connection_time_ms == 125);

    // mean shift across seeds equals the overhead exactly
    std::int64_t diff_total = 0;
    const int n = 200;
    for (int i = 0; i < n; ++i) {
        ScenarioConfig c = lossless(true);
        c.phase_latency.auth = LatencyDist::log_normal(90, 0.4);
        c.rng_seed = derive_seed(7, static_cast<std::uint64_t>(i));
        auto base = run_attempt(c);
        c.enterprise = EapParams{4, 12, 3};
        auto ent = run_attempt(c);
        diff_total += ent.attempt.phases->auth_ms - base.attempt.phases->auth_ms;
    }
    CHECK(diff_total == n * eap_overhead_ms({4, 12, 3}));
}

TEST_CASE("scenario validation rejects bad inputs") {
    ScenarioConfig cfg;
    cfg.p_loss_probe = 1.4;
    CHECK(validate(cfg).has_value());
    cfg = {};
    cfg.timeout_ms = 0;
    CHECK(validate(cfg).has_value());
    cfg = {};
    cfg.phase_latency.scan = LatencyDist::log_normal(-5, 0.3);
    CHECK(validate(cfg).has_value());
    CHECK_THROWS_AS(run_attempt(cfg), std::invalid_argument);
}

TEST_CASE("corpus generation is deterministic and size-exact") {
    CorpusConfig cfg;
    cfg.n_attempts = 500;
    cfg.rng_seed = 11;
    ScenarioTemplate t;
    t.name = "only";
    t.weight = 1.0;
    cfg.templates = {t};
    cfg.device_models = {{"DM-0", 1, 1, 1}};
    cfg.ap_models = {{"APM-0", 1, 1, 1, std::nullopt, std::nullopt}};
    cfg.keep_traces = true;

    auto a = generate_corpus(cfg);
    auto b = generate_corpus(cfg);
    CHECK(a.attempts == b.attempts);
    CHECK(a.traces == b.traces);
    CHECK(a.attempts.size() == 500);
    CHECK(a.traces.size() == 500);

    cfg.n_attempts = 0;
    auto empty = generate_corpus(cfg);
    CHECK(empty.attempts.empty());
    CHECK(empty.calibration.checks.empty());
}

TEST_CASE("corpus config weights must sum to one") {
    CorpusConfig cfg;
    cfg.n_attempts = 1;
    ScenarioTemplate t;
    t.weight = 0.7;
    cfg.templates = {t};
    cfg.device_models = {{"DM-0", 1, 1, 1}};
    cfg.ap_models = {{"APM-0", 1, 1, 1, std::nullopt, std::nullopt}};
    CHECK(validate(cfg).has_value());
    CHECK_THROWS_AS(generate_corpus(cfg), std::invalid_argument);
}

TEST_CASE("scenario and corpus configs survive the json round trip") {
    ScenarioConfig sc;
    sc.p_loss_probe = 0.12;
    sc.p_loss_dhcp = 0.3;
    sc.phase_latency.scan = LatencyDist::uniform(100, 900);
    sc.phase_latency.dhcp = LatencyDist::constant(700);
    sc.enterprise = EapParams{4, 9, 4};
    sc.encrypted = false;
    sc.timeout_ms = 20000;
    sc.rng_seed = 42;
    auto sc2 = scenario_from_json(to_json(sc));
    CHECK(to_json(sc2) == to_json(sc));

    CorpusConfig cfg;
    cfg.n_attempts = 10;
    cfg.rng_seed = 3;
    ScenarioTemplate t;
    t.name = "x";
    t.weight = 1.0;
    t.scenario = sc;
    cfg.templates = {t};
    cfg.device_models = {{"DM-0", 2, 0.9, 1.1}};
    cfg.ap_models = {{"APM-0", 1, 1.2, 1.0, true, Band::Band5GHz}};
    cfg.users = {25, 0.0, 3.0};
    cfg.targets.success_rate = 0.5;
    auto cfg2 = corpus_config_from_json(to_json(cfg));
    CHECK(to_json(cfg2) == to_json(cfg));
}

TEST_CASE("traces round-trip through jsonl") {
    ScenarioConfig cfg = lossless(true);
    cfg.p_loss_probe = 0.5;
    cfg.rng_seed = 606;
    auto res = run_attempt(cfg);
    res.trace.attempt_id = "att-1";

    std::ostringstream out;
    write_traces_jsonl({res.trace}, out);
    std::istringstream in(out.str());
    auto back = read_traces_jsonl(in);
    REQUIRE(back.size() == 1);
    CHECK(back[0] == res.trace);
}
