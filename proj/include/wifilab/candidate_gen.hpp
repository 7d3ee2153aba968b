#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "wifilab/selection_eval.hpp"
#include "wifilab/state_machine.hpp"

namespace wifilab {

// Counterfactual candidate-set generator. Every candidate carries the ground
// truth of connecting to it, drawn from its AP class: "good" models connect
// fast and reliably, "bad" models fail often and are slow when they succeed.
// A trap_fraction of events plant a bad AP as the strongest signal, which is
// exactly the situation a pure signal-strength policy walks into.
struct CandidateGenConfig {
    std::size_t n_events = 0;
    std::uint64_t rng_seed = 0;

    int candidates_min = 3;
    int candidates_max = 6;
    double trap_fraction = 0.33;   // strongest candidate is bad and fails
    double p_extra_bad = 0.25;     // each weaker candidate drawn from the bad pool

    std::vector<std::string> good_models = {"APM-g0", "APM-g1", "APM-g2", "APM-g3"};
    std::vector<std::string> bad_models = {"APM-b0", "APM-b1", "APM-b2"};
    std::vector<std::string> device_models = {"DM-0", "DM-1", "DM-2", "DM-3"};

    LatencyDist good_time = LatencyDist::log_normal(2000, 0.45);
    LatencyDist bad_success_time = LatencyDist::log_normal(21000, 0.18);
    double good_p_fail = 0.005;
    double bad_p_fail = 0.75;

    int strongest_rssi_min = -62, strongest_rssi_max = -56;
    int other_rssi_min = -88, other_rssi_max = -64;
    double p_encrypted = 0.7;
};

std::optional<std::string> validate(const CandidateGenConfig& cfg);

// Deterministic in rng_seed; event i depends only on (seed, i).
std::vector<CandidateSet> generate_candidate_sets(const CandidateGenConfig& cfg);

CandidateGenConfig candidate_gen_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const CandidateGenConfig& cfg);

}  // namespace wifilab
