#include "wifilab/state_machine.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "wifilab/rng.hpp"

namespace wifilab {

namespace {

constexpr std::array<const char*, kConnStateCount> kStateNames = {
    "Scanning", "Associating", "Authenticating", "ObtainingIp", "Connected", "Disconnected",
};

// Dwell spent in Disconnected before the device re-scans. Charged to the
// phase whose exchange failed so the four phases still partition the total.
constexpr std::int64_t kReconnectGapMs = 1;

enum Phase : int { kScan = 0, kAssoc = 1, kAuth = 2, kDhcp = 3 };

}  // namespace

const char* to_string(ConnState s) {
    return kStateNames[static_cast<std::size_t>(s)];
}

std::optional<ConnState> conn_state_from_string(std::string_view s) {
    for (int i = 0; i < kConnStateCount; ++i) {
        if (s == kStateNames[static_cast<std::size_t>(i)]) return static_cast<ConnState>(i);
    }
    return std::nullopt;
}

std::optional<std::string> validate(const TransitionTrace& t) {
    if (t.transitions.empty()) return std::nullopt;
    if (t.transitions.front().from != ConnState::Scanning) {
        return "first transition must start from Scanning";
    }
    std::int64_t prev = -1;
    for (std::size_t i = 0; i < t.transitions.size(); ++i) {
        const Transition& tr = t.transitions[i];
        if (tr.at_ms <= prev) return "timestamps must strictly increase";
        prev = tr.at_ms;
        if (i > 0 && t.transitions[i - 1].to != tr.from) {
            return "transition chain is not contiguous";
        }
        if (tr.from == ConnState::Connected) return "Connected is absorbing";
        if (tr.from == ConnState::Disconnected && tr.to != ConnState::Scanning) {
            return "Disconnected may only re-enter Scanning";
        }
    }
    return std::nullopt;
}

LatencyDist LatencyDist::constant(double ms) {
    LatencyDist d;
    d.family = Family::Constant;
    d.constant_ms = ms;
    return d;
}

LatencyDist LatencyDist::uniform(double lo, double hi) {
    LatencyDist d;
    d.family = Family::Uniform;
    d.lo_ms = lo;
    d.hi_ms = hi;
    return d;
}

LatencyDist LatencyDist::log_normal(double median_ms, double sigma) {
    LatencyDist d;
    d.family = Family::LogNormal;
    d.median_ms = median_ms;
    d.sigma = sigma;
    return d;
}

std::int64_t LatencyDist::sample(std::mt19937_64& rng) const {
    double v = 0.0;
    switch (family) {
        case Family::Constant:
            (void)rng();  // keep stream alignment uniform across families
            v = constant_ms;
            break;
        case Family::Uniform:
            v = lo_ms + uniform01(rng) * (hi_ms - lo_ms);
            break;
        case Family::LogNormal:
            v = lognormal(rng, median_ms, sigma);
            break;
    }
    return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::llround(v)));
}

LatencyDist LatencyDist::scaled(double mult) const {
    LatencyDist d = *this;
    d.constant_ms *= mult;
    d.lo_ms *= mult;
    d.hi_ms *= mult;
    d.median_ms *= mult;
    return d;
}

std::optional<std::string> LatencyDist::validate() const {
    switch (family) {
        case Family::Constant:
            if (!(constant_ms > 0)) return "constant latency must be positive";
            break;
        case Family::Uniform:
            if (!(lo_ms > 0) || hi_ms < lo_ms) return "uniform latency bounds invalid";
            break;
        case Family::LogNormal:
            if (!(median_ms > 0) || sigma < 0) return "log-normal latency parameters invalid";
            break;
    }
    return std::nullopt;
}

std::int64_t eap_overhead_ms(const EapParams& p) {
    return 2 * static_cast<std::int64_t>(p.n_e) * (p.t_w_ms + p.t_a_ms) + p.t_a_ms;
}

std::optional<std::string> validate(const ScenarioConfig& cfg) {
    for (double p : {cfg.p_loss_probe, cfg.p_loss_assoc, cfg.p_loss_auth, cfg.p_loss_dhcp}) {
        if (p < 0.0 || p > 1.0) return "loss probability out of [0,1]";
    }
    for (const LatencyDist* d :
         {&cfg.phase_latency.scan, &cfg.phase_latency.assoc, &cfg.phase_latency.auth,
          &cfg.phase_latency.dhcp}) {
        if (auto err = d->validate()) return err;
    }
    if (cfg.timeout_ms <= 0) return "timeout_ms must be positive";
    if (cfg.enterprise) {
        if (cfg.enterprise->n_e < 0 || cfg.enterprise->t_w_ms < 0 || cfg.enterprise->t_a_ms < 0) {
            return "EAP parameters must be non-negative";
        }
    }
    return std::nullopt;
}

AttemptResult run_attempt(const ScenarioConfig& cfg) {
    if (auto err = validate(cfg)) throw std::invalid_argument("bad scenario: " + *err);

    // Independent streams per phase plus one for loss draws.
    std::array<std::mt19937_64, 4> lat_rng = {
        make_rng(cfg.rng_seed, 1), make_rng(cfg.rng_seed, 2), make_rng(cfg.rng_seed, 3),
        make_rng(cfg.rng_seed, 4)};
    std::mt19937_64 loss_rng = make_rng(cfg.rng_seed, 5);

    const std::array<const LatencyDist*, 4> dist = {
        &cfg.phase_latency.scan, &cfg.phase_latency.assoc, &cfg.phase_latency.auth,
        &cfg.phase_latency.dhcp};
    const std::array<double, 4> p_loss = {cfg.p_loss_probe, cfg.p_loss_assoc, cfg.p_loss_auth,
                                          cfg.p_loss_dhcp};

    // (phase, start, end) segments; Disconnected gaps are folded into the
    // failing phase's segment.
    struct Segment {
        int phase;
        std::int64_t start, end;
    };
    std::vector<Segment> segments;
    std::vector<Transition> transitions;

    ConnState state = ConnState::Scanning;
    std::int64_t now = 0;
    std::int64_t connected_at = -1;
    std::int64_t entered_dhcp_at = -1;

    auto fail_to_scanning = [&](ConnState from, int phase, std::int64_t dwell) {
        segments.push_back({phase, now, now + dwell + kReconnectGapMs});
        transitions.push_back({from, ConnState::Disconnected, now + dwell});
        transitions.push_back({ConnState::Disconnected, ConnState::Scanning,
                               now + dwell + kReconnectGapMs});
        now += dwell + kReconnectGapMs;
        state = ConnState::Scanning;
    };

    auto advance = [&](ConnState from, ConnState to, int phase, std::int64_t dwell) {
        segments.push_back({phase, now, now + dwell});
        transitions.push_back({from, to, now + dwell});
        now += dwell;
        state = to;
    };

    while (state != ConnState::Connected && now < cfg.timeout_ms) {
        switch (state) {
            case ConnState::Scanning: {
                const std::int64_t d = dist[kScan]->sample(lat_rng[kScan]);
                if (bernoulli(loss_rng, p_loss[kScan])) {
                    fail_to_scanning(ConnState::Scanning, kScan, d);
                } else {
                    advance(ConnState::Scanning, ConnState::Associating, kScan, d);
                }
                break;
            }
            case ConnState::Associating: {
                const std::int64_t d = dist[kAssoc]->sample(lat_rng[kAssoc]);
                if (bernoulli(loss_rng, p_loss[kAssoc])) {
                    fail_to_scanning(ConnState::Associating, kAssoc, d);
                } else {
                    advance(ConnState::Associating,
                            cfg.encrypted ? ConnState::Authenticating : ConnState::ObtainingIp,
                            kAssoc, d);
                }
                break;
            }
            case ConnState::Authenticating: {
                std::int64_t d = dist[kAuth]->sample(lat_rng[kAuth]);
                if (bernoulli(loss_rng, p_loss[kAuth])) {
                    fail_to_scanning(ConnState::Authenticating, kAuth, d);
                } else {
                    if (cfg.enterprise) d += eap_overhead_ms(*cfg.enterprise);
                    advance(ConnState::Authenticating, ConnState::ObtainingIp, kAuth, d);
                }
                break;
            }
            case ConnState::ObtainingIp: {
                if (entered_dhcp_at < 0) entered_dhcp_at = now;
                const std::int64_t d = dist[kDhcp]->sample(lat_rng[kDhcp]);
                if (bernoulli(loss_rng, p_loss[kDhcp])) {
                    // DHCP retries in place: dwell accrues, no state change.
                    segments.push_back({kDhcp, now, now + d});
                    now += d;
                } else {
                    advance(ConnState::ObtainingIp, ConnState::Connected, kDhcp, d);
                    connected_at = now;
                }
                break;
            }
            case ConnState::Connected:
            case ConnState::Disconnected:
                throw std::logic_error("unreachable state in attempt loop");
        }
    }

    AttemptResult res;
    res.attempt.encrypted = cfg.encrypted;

    const bool success = connected_at >= 0 && connected_at <= cfg.timeout_ms;
    const std::int64_t horizon = success ? connected_at : cfg.timeout_ms;

    PhaseTiming phases;
    std::array<std::int64_t*, 4> acc = {&phases.scan_ms, &phases.assoc_ms, &phases.auth_ms,
                                        &phases.dhcp_ms};
    for (const Segment& s : segments) {
        const std::int64_t end = std::min(s.end, horizon);
        if (end > s.start) *acc[static_cast<std::size_t>(s.phase)] += end - s.start;
    }
    res.attempt.phases = phases;

    if (success) {
        res.attempt.outcome = Outcome::Success;
        res.attempt.connection_time_ms = connected_at;
        res.trace.transitions = std::move(transitions);
    } else {
        res.attempt.outcome = (entered_dhcp_at >= 0 && entered_dhcp_at < cfg.timeout_ms)
                                  ? Outcome::DhcpFailure
                                  : Outcome::Timeout;
        // Truncate to the attempt window and close the trace in Disconnected.
        ConnState at_deadline = ConnState::Scanning;
        for (const Transition& tr : transitions) {
            if (tr.at_ms >= cfg.timeout_ms) break;
            res.trace.transitions.push_back(tr);
            at_deadline = tr.to;
        }
        if (at_deadline != ConnState::Disconnected) {
            res.trace.transitions.push_back({at_deadline, ConnState::Disconnected, cfg.timeout_ms});
        }
    }
    return res;
}

}  // namespace wifilab
