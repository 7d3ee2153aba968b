#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "wifilab/log_schema.hpp"
#include "wifilab/state_machine.hpp"

namespace wifilab {

// One entry of a categorical universe. latency_mult scales every phase
// latency of attempts drawn with this entry; loss_mult scales the loss
// probabilities (clamped to [0,1]).
struct DeviceModelSpec {
    std::string id;
    double weight = 1.0;
    double latency_mult = 1.0;
    double loss_mult = 1.0;
};

struct ApModelSpec {
    std::string id;
    double weight = 1.0;
    double latency_mult = 1.0;
    double loss_mult = 1.0;
    std::optional<bool> is_public;
    std::optional<Band> band;
};

// Users get a deterministic failure propensity spread across
// [fail_mult_min, fail_mult_max] by index; it scales the weights of
// failure-group templates for that user's attempts.
struct UserPopulation {
    int count = 100;
    double fail_mult_min = 1.0;
    double fail_mult_max = 1.0;
};

// A weighted way an attempt can play out. Either the state machine runs the
// scenario, or outcome_override stamps a user-abandon outcome directly
// (no time cost, no phases, no trace).
struct ScenarioTemplate {
    std::string name;
    double weight = 1.0;
    std::optional<Outcome> outcome_override;
    ScenarioConfig scenario;
    bool failure_group = false;  // scaled by the per-user failure propensity
    bool scale_latency = true;   // context multipliers apply
};

// Weaker signal slows everything down: each dBm below the recording ceiling
// adds latency_mult_per_dbm (and loss_mult_per_dbm) to the multipliers.
struct RssiModel {
    int min_dbm = -95;
    int max_dbm = -45;  // sampled value is then clamped to the ceiling
    double latency_mult_per_dbm = 0.0;
    double loss_mult_per_dbm = 0.0;
};

// Daytime bump: multiplier 1 + amplitude * shape[hour], shape peaking at
// lunch and dinner hours.
struct HourModel {
    double amplitude = 0.0;
};

struct NumDevicesModel {
    int max = 0;
    double latency_mult_per_device = 0.0;
};

struct CalibrationTargets {
    std::optional<double> success_rate;
    std::optional<double> willing_failure_rate;    // Timeout + DhcpFailure mass
    std::optional<double> frac_success_under_5s;
    std::optional<double> frac_success_over_15s;
    double tolerance = 0.015;
};

struct CorpusConfig {
    std::size_t n_attempts = 0;
    std::uint64_t rng_seed = 0;
    std::vector<ScenarioTemplate> templates;       // weights must sum to 1
    std::vector<DeviceModelSpec> device_models;
    std::vector<ApModelSpec> ap_models;
    UserPopulation users;
    RssiModel rssi;
    HourModel hours;
    NumDevicesModel num_devices;
    double instrumented_fraction = 1.0;  // attempts carrying phase timings
    CalibrationTargets targets;
    bool keep_traces = false;
};

std::optional<std::string> validate(const CorpusConfig& cfg);

struct CalibrationCheck {
    std::string name;
    double target = 0.0;
    double achieved = 0.0;
    double tolerance = 0.0;
    bool within = false;
};

struct CalibrationReport {
    std::size_t n_attempts = 0;
    double success_rate = 0.0;
    double willing_failure_rate = 0.0;
    double abandon_rate = 0.0;
    double frac_success_under_5s = 0.0;
    double frac_success_over_15s = 0.0;
    std::vector<CalibrationCheck> checks;  // empty when no targets configured
    bool all_within = true;                // misses are warnings, not errors
};

struct GeneratedCorpus {
    std::vector<ConnectionAttempt> attempts;
    std::vector<TransitionTrace> traces;  // populated when keep_traces is set
    CalibrationReport calibration;
};

// Deterministic in cfg.rng_seed; attempt i depends only on (seed, i), so
// generation order never matters.
GeneratedCorpus generate_corpus(const CorpusConfig& cfg);

// JSON config surface (the CLI's --config document).
LatencyDist latency_dist_from_json(const nlohmann::json& j);
nlohmann::json to_json(const LatencyDist& d);
ScenarioConfig scenario_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ScenarioConfig& cfg);
CorpusConfig corpus_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const CorpusConfig& cfg);
nlohmann::json to_json(const CalibrationReport& r);

// Traces as JSONL, one attempt per line.
void write_traces_jsonl(const std::vector<TransitionTrace>& traces, std::ostream& out);
std::vector<TransitionTrace> read_traces_jsonl(std::istream& in);

}  // namespace wifilab
