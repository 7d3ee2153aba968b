#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "wifilab/analytics.hpp"
#include "wifilab/log_schema.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string binary() {
    const char* bin = std::getenv("WIFI_LAB_BIN");
    REQUIRE_MESSAGE(bin != nullptr, "WIFI_LAB_BIN must point at the wifi_lab binary");
    return bin;
}

std::string config_dir() {
    const char* dir = std::getenv("WIFILAB_CONFIG_DIR");
    REQUIRE_MESSAGE(dir != nullptr, "WIFILAB_CONFIG_DIR must point at configs/");
    return dir;
}

int run(const std::string& args) {
    const std::string cmd = binary() + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    TempDir() : path(fs::temp_directory_path() / ("wifilab_cli_" + std::to_string(::getpid()))) {
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

void write_small_corpus_config(const fs::path& p, std::size_t n, std::uint64_t seed) {
    json cfg = {
        {"kind", "corpus"},
        {"n_attempts", n},
        {"rng_seed", seed},
        {"templates",
         {{{"name", "ok"},
           {"weight", 0.7},
           {"scenario",
            {{"encrypted", true},
             {"phase_latency",
              {{"scan", {{"family", "lognormal"}, {"median_ms", 300}, {"sigma", 0.4}}},
               {"assoc", {{"family", "lognormal"}, {"median_ms", 60}, {"sigma", 0.3}}},
               {"auth", {{"family", "lognormal"}, {"median_ms", 50}, {"sigma", 0.3}}},
               {"dhcp", {{"family", "lognormal"}, {"median_ms", 1500}, {"sigma", 0.4}}}}}}}},
          {{"name", "slow"},
           {"weight", 0.2},
           {"scenario",
            {{"encrypted", true},
             {"phase_latency",
              {{"scan", {{"family", "lognormal"}, {"median_ms", 9000}, {"sigma", 0.3}}},
               {"assoc", {{"family", "lognormal"}, {"median_ms", 100}, {"sigma", 0.3}}},
               {"auth", {{"family", "lognormal"}, {"median_ms", 80}, {"sigma", 0.3}}},
               {"dhcp", {{"family", "lognormal"}, {"median_ms", 9000}, {"sigma", 0.3}}}}}}}},
          {{"name", "down"}, {"weight", 0.1}, {"failure_group", true},
           {"scenario", {{"p_loss_dhcp", 1.0}}}}}},
        {"device_models", {{{"id", "DM-a"}, {"latency_mult", 0.8}}, {{"id", "DM-b"}, {"latency_mult", 1.4}}}},
        {"ap_models", {{{"id", "APM-a"}}, {{"id", "APM-b"}, {"latency_mult", 1.2}}}},
        {"users", {{"count", 50}}},
    };
    std::ofstream out(p);
    out << cfg.dump(2);
}

}  // namespace

TEST_CASE("simulate is byte-deterministic given a seed") {
    TempDir tmp;
    write_small_corpus_config(tmp.path / "cfg.json", 400, 5);
    const std::string base = " simulate --config " + (tmp.path / "cfg.json").string();
    CHECK(run(base + " --out " + (tmp.path / "a.jsonl").string() + " --seed 7") == 0);
    CHECK(run(base + " --out " + (tmp.path / "b.jsonl").string() + " --seed 7") == 0);
    CHECK(run(base + " --out " + (tmp.path / "c.jsonl").string() + " --seed 8") == 0);
    CHECK(slurp(tmp.path / "a.jsonl") == slurp(tmp.path / "b.jsonl"));
    CHECK(slurp(tmp.path / "a.jsonl") != slurp(tmp.path / "c.jsonl"));
}

TEST_CASE("simulate with n=0 writes an empty corpus and exits zero") {
    TempDir tmp;
    write_small_corpus_config(tmp.path / "cfg.json", 0, 1);
    CHECK(run("simulate --config " + (tmp.path / "cfg.json").string() + " --out " +
              (tmp.path / "empty.jsonl").string()) == 0);
    CHECK(slurp(tmp.path / "empty.jsonl").empty());
}

TEST_CASE("missing config and bad flags map to the documented exit codes") {
    TempDir tmp;
    CHECK(run("simulate --config /no/such/config.json --out " +
              (tmp.path / "x.jsonl").string()) == 2);
    CHECK(run("simulate --config-file-typo x") == 1);
    CHECK(run("frobnicate") == 1);
    CHECK(run("analyze --in /no/such/corpus.jsonl --out-dir " + tmp.path.string()) == 2);
    write_small_corpus_config(tmp.path / "cfg.json", 10, 1);
    CHECK(run("simulate --config " + (tmp.path / "cfg.json").string() + " --out " +
              (tmp.path / "x.jsonl").string() + " --format parquet") == 1);
}

TEST_CASE("the timeout override caps every stored success time") {
    TempDir tmp;
    write_small_corpus_config(tmp.path / "cfg.json", 800, 3);
    const auto corpus = (tmp.path / "corpus.jsonl").string();
    REQUIRE(run("simulate --config " + (tmp.path / "cfg.json").string() + " --out " + corpus +
                " --timeout-ms 4000") == 0);
    auto res = wifilab::ingest_file(corpus, wifilab::LogFormat::Jsonl);
    std::size_t successes = 0, timeouts = 0;
    for (const auto& a : res.attempts) {
        if (a.outcome == wifilab::Outcome::Success) {
            ++successes;
            CHECK(*a.connection_time_ms <= 4000);
        }
        if (a.outcome == wifilab::Outcome::Timeout) ++timeouts;
    }
    CHECK(successes > 0);
    CHECK(timeouts > 0);  // the slow template cannot finish in 4s any more
}

TEST_CASE("analyze rejects an empty corpus") {
    TempDir tmp;
    write_small_corpus_config(tmp.path / "cfg.json", 0, 1);
    REQUIRE(run("simulate --config " + (tmp.path / "cfg.json").string() + " --out " +
                (tmp.path / "empty.jsonl").string()) == 0);
    CHECK(run("analyze --in " + (tmp.path / "empty.jsonl").string() + " --out-dir " +
              (tmp.path / "rep").string()) == 2);
}

TEST_CASE("the full pipeline runs end to end") {
    TempDir tmp;
    write_small_corpus_config(tmp.path / "cfg.json", 3000, 11);
    const auto corpus = (tmp.path / "corpus.jsonl").string();
    const auto traces = (tmp.path / "traces.jsonl").string();
    REQUIRE(run("simulate --config " + (tmp.path / "cfg.json").string() + " --out " + corpus +
                " --traces " + traces + " --report " + (tmp.path / "cal.json").string()) == 0);

    // analyze with traces and a class filter
    const auto rep = (tmp.path / "rep").string();
    REQUIRE(run("analyze --in " + corpus + " --traces " + traces + " --out-dir " + rep) == 0);
    for (const char* f :
         {"outcome_proportions.json", "success_time_cdf.csv", "phase_proportions.json",
          "scan_time_quantiles.csv", "correlation_report.json", "transition_matrix.json",
          "group_device_model.json", "binned_mean_rssi.csv"}) {
        CHECK_MESSAGE(fs::exists(fs::path(rep) / f), f);
    }
    auto props = json::parse(slurp(fs::path(rep) / "outcome_proportions.json"));
    double total = 0;
    for (const auto& [_, v] : props.items()) total += v.get<double>();
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));

    // the subcommand is a thin wrapper: its numbers equal the module's
    auto ingested = wifilab::ingest_file(corpus, wifilab::LogFormat::Jsonl);
    auto module_props = wifilab::outcome_proportions(ingested.attempts);
    for (const auto& [o, frac] : module_props) {
        CHECK(props.at(wifilab::to_string(o)).get<double>() == frac);
    }

    REQUIRE(run("analyze --in " + corpus + " --out-dir " + (tmp.path / "rep2").string() +
                " --class 0-7s") == 0);
    const auto quants = slurp(tmp.path / "rep2" / "scan_time_quantiles.csv");
    CHECK(quants.find("0-7s") != std::string::npos);
    CHECK(quants.find("15-30s") == std::string::npos);

    // train on csv to exercise the other format
    const auto corpus_csv = (tmp.path / "corpus.csv").string();
    REQUIRE(run("simulate --config " + (tmp.path / "cfg.json").string() + " --out " + corpus_csv +
                " --format csv") == 0);
    const auto model = (tmp.path / "model.bin").string();
    REQUIRE(run("train --in " + corpus_csv + " --format csv --out " + model + " --trees 20" +
                " --seed 3 --metrics " + (tmp.path / "metrics.json").string()) == 0);
    auto metrics = json::parse(slurp(tmp.path / "metrics.json"));
    CHECK(metrics.contains("validation"));
    CHECK(metrics["n_train"].get<int>() > 0);
}

TEST_CASE("eval and select work over candidate sets") {
    TempDir tmp;
    json gen = {{"kind", "candidates"}, {"n_events", 4000}, {"rng_seed", 99}};
    {
        std::ofstream out(tmp.path / "gen.json");
        out << gen.dump();
    }
    const auto cands = (tmp.path / "cands.jsonl").string();
    REQUIRE(run("simulate --config " + (tmp.path / "gen.json").string() + " --out " + cands) == 0);

    // csv output for candidate sets is a usage error
    CHECK(run("simulate --config " + (tmp.path / "gen.json").string() + " --out " +
              (tmp.path / "x.csv").string() + " --format csv") == 1);

    const auto report = (tmp.path / "eval.json").string();
    REQUIRE(run("eval --in " + cands + " --out " + report +
                " --trees 20 --seed 5 --split-seed 11") == 0);
    auto rep = json::parse(slurp(report));
    CHECK(rep["baseline"]["failure_rate"].get<double>() >
          rep["ml"]["failure_rate"].get<double>());

    // identical inputs and seeds give identical reports
    const auto report2 = (tmp.path / "eval2.json").string();
    REQUIRE(run("eval --in " + cands + " --out " + report2 +
                " --trees 20 --seed 5 --split-seed 11") == 0);
    CHECK(slurp(report) == slurp(report2));

    // train a model on labeled candidate rows via a corpus, then select
    write_small_corpus_config(tmp.path / "cfg.json", 3000, 21);
    const auto corpus = (tmp.path / "corpus.jsonl").string();
    REQUIRE(run("simulate --config " + (tmp.path / "cfg.json").string() + " --out " + corpus) == 0);
    const auto model = (tmp.path / "model.bin").string();
    REQUIRE(run("train --in " + corpus + " --out " + model + " --trees 10 --seed 2" +
                " --metrics " + (tmp.path / "m.json").string()) == 0);
    const auto decisions = (tmp.path / "decisions.jsonl").string();
    REQUIRE(run("select --in " + cands + " --model " + model + " --out " + decisions) == 0);

    std::ifstream dec(decisions);
    std::string line;
    std::size_t n = 0;
    bool saw_fallback_field = false;
    while (std::getline(dec, line)) {
        auto j = json::parse(line);
        CHECK(j.contains("chosen_id"));
        saw_fallback_field = saw_fallback_field || j.contains("fallback_used");
        ++n;
    }
    CHECK(n == 4000);
    CHECK(saw_fallback_field);

    // version-mismatched or garbage model files are data errors
    {
        std::ofstream bad(tmp.path / "bad.bin", std::ios::binary);
        bad << "GARBAGE";
    }
    CHECK(run("select --in " + cands + " --model " + (tmp.path / "bad.bin").string() + " --out " +
              (tmp.path / "d2.jsonl").string()) == 2);
}

TEST_CASE("select reports fallback for sets the model rejects entirely") {
    TempDir tmp;
    // corpus whose ap model maps cleanly to FAST/SLOW, then a candidate set
    // containing only the slow model
    json cfg = {
        {"kind", "corpus"},
        {"n_attempts", 2000},
        {"rng_seed", 31},
        {"templates",
         {{{"name", "base"},
           {"weight", 1.0},
           {"scenario",
            {{"p_loss_probe", 0.02},
             {"phase_latency",
              {{"scan", {{"family", "constant"}, {"value_ms", 200}}},
               {"assoc", {{"family", "constant"}, {"value_ms", 50}}},
               {"auth", {{"family", "constant"}, {"value_ms", 50}}},
               {"dhcp", {{"family", "constant"}, {"value_ms", 1000}}}}}}}}}},
        {"device_models", {{{"id", "DM-a"}}}},
        {"ap_models",
         {{{"id", "APM-fast"}, {"loss_mult", 0.0}}, {{"id", "APM-slow"}, {"loss_mult", 50.0}}}},
        {"users", {{"count", 10}}},
    };
    {
        std::ofstream out(tmp.path / "cfg.json");
        out << cfg.dump();
    }
    const auto corpus = (tmp.path / "corpus.jsonl").string();
    REQUIRE(run("simulate --config " + (tmp.path / "cfg.json").string() + " --out " + corpus) == 0);
    const auto model = (tmp.path / "model.bin").string();
    REQUIRE(run("train --in " + corpus + " --out " + model +
                " --trees 15 --seed 4 --encoder-min-count 1 --metrics " +
                (tmp.path / "m.json").string()) == 0);

    json all_slow = {{"event_id", "ev-0"},
                     {"hour_of_day", 12},
                     {"device_model", "DM-a"},
                     {"candidates",
                      {{{"id", "x"}, {"ap_model", "APM-slow"}, {"rssi_dbm", -70}, {"encrypted", true}},
                       {{"id", "y"}, {"ap_model", "APM-slow"}, {"rssi_dbm", -60}, {"encrypted", true}}}}};
    {
        std::ofstream out(tmp.path / "cands.jsonl");
        out << all_slow.dump() << "\n";
    }
    const auto decisions = (tmp.path / "decisions.jsonl").string();
    REQUIRE(run("select --in " + (tmp.path / "cands.jsonl").string() + " --model " + model +
                " --out " + decisions) == 0);
    auto d = json::parse(slurp(decisions));
    CHECK(d["chosen_id"] == "y");  // strongest rssi fallback
    CHECK(d["fallback_used"] == true);
}
