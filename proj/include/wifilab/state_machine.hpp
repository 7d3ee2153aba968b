#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "wifilab/log_schema.hpp"

namespace wifilab {

// States a device walks through while setting up a connection. Connected is
// absorbing; Disconnected is terminal for failed attempts and otherwise
// bounces straight back into Scanning.
enum class ConnState {
    Scanning,
    Associating,
    Authenticating,
    ObtainingIp,
    Connected,
    Disconnected,
};

inline constexpr int kConnStateCount = 6;

const char* to_string(ConnState s);
std::optional<ConnState> conn_state_from_string(std::string_view s);

struct Transition {
    ConnState from = ConnState::Scanning;
    ConnState to = ConnState::Scanning;
    std::int64_t at_ms = 0;

    bool operator==(const Transition&) const = default;
};

struct TransitionTrace {
    std::string attempt_id;
    std::vector<Transition> transitions;

    bool operator==(const TransitionTrace&) const = default;
};

// First transition leaves Scanning, timestamps strictly increase, and every
// Disconnected entry is either re-entered into Scanning or ends the attempt.
std::optional<std::string> validate(const TransitionTrace& t);

// Latency model for one phase. Samples are rounded to integer milliseconds
// and floored at 1 ms so trace timestamps always advance.
struct LatencyDist {
    enum class Family { Constant, Uniform, LogNormal };

    Family family = Family::LogNormal;
    double constant_ms = 100.0;           // Constant
    double lo_ms = 1.0, hi_ms = 1.0;      // Uniform, inclusive
    double median_ms = 100.0, sigma = 0.3;  // LogNormal

    static LatencyDist constant(double ms);
    static LatencyDist uniform(double lo, double hi);
    static LatencyDist log_normal(double median_ms, double sigma);

    std::int64_t sample(std::mt19937_64& rng) const;
    LatencyDist scaled(double mult) const;  // scales location, keeps shape
    std::optional<std::string> validate() const;
};

struct PhaseLatency {
    LatencyDist scan = LatencyDist::log_normal(400, 0.3);
    LatencyDist assoc = LatencyDist::log_normal(60, 0.3);
    LatencyDist auth = LatencyDist::log_normal(60, 0.3);
    LatencyDist dhcp = LatencyDist::log_normal(1200, 0.3);
};

// Enterprise authentication cost: n_e EAP round trips over the wireless hop
// (t_w) and the wired AP<->AAA leg (t_a), plus one trailing wired leg.
struct EapParams {
    int n_e = 4;
    std::int64_t t_w_ms = 0;
    std::int64_t t_a_ms = 0;
};

std::int64_t eap_overhead_ms(const EapParams& p);

struct ScenarioConfig {
    double p_loss_probe = 0.0;  // scan round gets no usable response
    double p_loss_assoc = 0.0;  // association exchange fails
    double p_loss_auth = 0.0;   // authentication exchange fails
    double p_loss_dhcp = 0.0;   // one DHCP round fails (retried in place)
    PhaseLatency phase_latency;
    bool encrypted = true;
    std::optional<EapParams> enterprise;
    std::int64_t timeout_ms = kAttemptTimeoutMs;
    std::uint64_t rng_seed = 0;
};

std::optional<std::string> validate(const ScenarioConfig& cfg);

struct AttemptResult {
    ConnectionAttempt attempt;  // outcome, time, phases, encrypted filled in
    TransitionTrace trace;
};

// Simulates one connection set-up process. Deterministic in cfg.rng_seed;
// each phase and the loss draws use independent derived streams, so toggling
// the enterprise overhead does not shift any latency draw.
AttemptResult run_attempt(const ScenarioConfig& cfg);

}  // namespace wifilab
