#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "wifilab/analytics.hpp"
#include "wifilab/forest.hpp"

namespace wifilab {

// One AP visible in a scan, with the counterfactual result of connecting to
// it (the replay ground truth). truth_outcome is restricted to the willing
// subset; truth_time_ms is present exactly for Success.
struct Candidate {
    std::string id;
    std::string ap_model;
    int rssi_dbm = -70;
    bool encrypted = true;
    std::optional<Outcome> truth_outcome;
    std::optional<std::int64_t> truth_time_ms;
};

struct CandidateSet {
    std::string event_id;
    int hour_of_day = 0;
    std::string device_model;
    std::vector<Candidate> candidates;
};

std::optional<std::string> validate(const CandidateSet& cs);

struct SelectionDecision {
    std::string chosen_id;
    std::vector<std::string> fast_ids;  // empty for the baseline
    std::vector<std::string> slow_ids;
    bool fallback_used = false;
};

// Classify every candidate, then take the strongest signal from the FAST
// set; RSSI ties go to the lexicographically smallest id. An empty FAST set
// falls back to the overall strongest signal.
SelectionDecision select_ml(const ForestModel& model, const CandidateSet& cs);

// Strongest signal over all candidates, same tie rule.
SelectionDecision select_baseline(const CandidateSet& cs);

// Fraction of classified candidates that landed in the FAST set.
double poa(std::size_t n_fast, std::size_t n_slow);
double poa(std::span<const SelectionDecision> decisions);

struct AlgorithmOutcome {
    std::string name;
    double failure_rate = 0.0;
    double p80_ms = 0.0;
    Cdf scored_cdf;  // failures scored at 30 s
    std::size_t n_events = 0;
    std::size_t fallback_count = 0;  // ML only
};

struct EvalReport {
    AlgorithmOutcome baseline;
    AlgorithmOutcome ml;
    double poa = 0.0;              // over eval-half classifications
    MetricsReport model_metrics;   // classifier quality on the eval half
    std::size_t n_train_events = 0;
    std::size_t n_eval_events = 0;
    std::size_t n_excluded = 0;    // sets lacking full ground truth
    std::optional<double> remote_rtt_ms;  // reported, never added to scores
};

struct WhatIfConfig {
    ForestParams forest;
    std::int64_t fast_threshold_ms = kFastThresholdMs;
    std::size_t encoder_min_count = 5;
    std::uint64_t split_seed = 0;
    std::optional<double> remote_rtt_ms;
};

// Replay evaluation: deterministic 50/50 split of the events by split_seed,
// encoders and forest trained on the first half only, both policies replayed
// on the second half, the chosen candidate scored by its ground truth with
// failures counted as 30 s.
EvalReport what_if_eval(std::span<const CandidateSet> events, const WhatIfConfig& cfg);

nlohmann::json to_json(const MetricsReport& m);
nlohmann::json to_json(const EvalReport& r);
nlohmann::json to_json(const SelectionDecision& d, const std::string& event_id);

// Candidate-set corpora travel as JSONL, one event per line.
void write_candidate_sets_jsonl(std::span<const CandidateSet> sets, std::ostream& out);
std::vector<CandidateSet> read_candidate_sets_jsonl(std::istream& in);
std::vector<CandidateSet> read_candidate_sets_file(const std::string& path);

}  // namespace wifilab
