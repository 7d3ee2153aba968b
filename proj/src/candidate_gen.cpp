#include "wifilab/candidate_gen.hpp"

#include <algorithm>
#include <stdexcept>

#include <json.hpp>

#include "wifilab/corpus_gen.hpp"
#include "wifilab/rng.hpp"

namespace wifilab {

using nlohmann::json;

std::optional<std::string> validate(const CandidateGenConfig& cfg) {
    if (cfg.candidates_min < 1 || cfg.candidates_max < cfg.candidates_min) {
        return "candidate count range invalid";
    }
    if (cfg.trap_fraction < 0 || cfg.trap_fraction > 1) return "trap_fraction out of [0,1]";
    if (cfg.p_extra_bad < 0 || cfg.p_extra_bad > 1) return "p_extra_bad out of [0,1]";
    if (cfg.good_models.empty() || cfg.bad_models.empty()) return "AP model pools must be non-empty";
    if (cfg.device_models.empty()) return "device model pool must be non-empty";
    if (cfg.good_p_fail < 0 || cfg.good_p_fail > 1 || cfg.bad_p_fail < 0 || cfg.bad_p_fail > 1) {
        return "failure probability out of [0,1]";
    }
    if (auto err = cfg.good_time.validate()) return err;
    if (auto err = cfg.bad_success_time.validate()) return err;
    if (cfg.strongest_rssi_min > cfg.strongest_rssi_max ||
        cfg.other_rssi_min > cfg.other_rssi_max) {
        return "rssi range inverted";
    }
    if (cfg.other_rssi_max >= cfg.strongest_rssi_min) {
        return "weaker candidates must stay below the strongest rssi range";
    }
    if (cfg.strongest_rssi_max > kRssiCeilingDbm) return "rssi above recording ceiling";
    if (cfg.p_encrypted < 0 || cfg.p_encrypted > 1) return "p_encrypted out of [0,1]";
    return std::nullopt;
}

namespace {

std::int64_t clamp_success_time(std::int64_t ms) {
    // Ground truth success times live inside the attempt window.
    return std::clamp<std::int64_t>(ms, 1, kAttemptTimeoutMs);
}

void fill_truth(Candidate& c, bool bad, bool force_fail, const CandidateGenConfig& cfg,
                std::mt19937_64& rng) {
    const double p_fail = bad ? cfg.bad_p_fail : cfg.good_p_fail;
    const bool fails = force_fail || bernoulli(rng, p_fail);
    // Two draws per candidate either way keeps the stream aligned.
    const std::int64_t t = (bad ? cfg.bad_success_time : cfg.good_time).sample(rng);
    if (fails) {
        c.truth_outcome = (rng() & 1) ? Outcome::Timeout : Outcome::DhcpFailure;
    } else {
        c.truth_outcome = Outcome::Success;
        c.truth_time_ms = clamp_success_time(t);
    }
}

std::string pad(const char* prefix, std::size_t n, int digits) {
    std::string s = std::to_string(n);
    if (static_cast<int>(s.size()) < digits) s.insert(0, static_cast<std::size_t>(digits) - s.size(), '0');
    return std::string(prefix) + s;
}

}  // namespace

std::vector<CandidateSet> generate_candidate_sets(const CandidateGenConfig& cfg) {
    if (auto err = validate(cfg)) throw std::invalid_argument("bad candidate config: " + *err);

    std::vector<CandidateSet> sets;
    sets.reserve(cfg.n_events);
    for (std::size_t i = 0; i < cfg.n_events; ++i) {
        std::mt19937_64 rng = make_rng(cfg.rng_seed, 0xCA000000u + i);
        CandidateSet cs;
        cs.event_id = pad("ev-", i, 8);
        cs.hour_of_day = static_cast<int>(uniform_int(rng, 0, 23));
        cs.device_model = cfg.device_models[static_cast<std::size_t>(
            uniform_int(rng, 0, static_cast<std::int64_t>(cfg.device_models.size()) - 1))];

        const int k = static_cast<int>(uniform_int(rng, cfg.candidates_min, cfg.candidates_max));
        const bool trap = bernoulli(rng, cfg.trap_fraction);

        for (int c = 0; c < k; ++c) {
            Candidate cand;
            cand.id = pad("ap-", static_cast<std::size_t>(c), 2);
            cand.encrypted = bernoulli(rng, cfg.p_encrypted);
            const bool is_strongest = c == 0;
            bool bad;
            if (is_strongest) {
                cand.rssi_dbm = static_cast<int>(
                    uniform_int(rng, cfg.strongest_rssi_min, cfg.strongest_rssi_max));
                bad = trap;
            } else {
                cand.rssi_dbm =
                    static_cast<int>(uniform_int(rng, cfg.other_rssi_min, cfg.other_rssi_max));
                bad = bernoulli(rng, cfg.p_extra_bad);
            }
            const auto& pool = bad ? cfg.bad_models : cfg.good_models;
            cand.ap_model = pool[static_cast<std::size_t>(
                uniform_int(rng, 0, static_cast<std::int64_t>(pool.size()) - 1))];
            fill_truth(cand, bad, /*force_fail=*/is_strongest && trap, cfg, rng);
            cs.candidates.push_back(std::move(cand));
        }
        sets.push_back(std::move(cs));
    }
    return sets;
}

CandidateGenConfig candidate_gen_config_from_json(const json& j) {
    CandidateGenConfig cfg;
    cfg.n_events = j.at("n_events").get<std::size_t>();
    cfg.rng_seed = j.value("rng_seed", std::uint64_t{0});
    cfg.candidates_min = j.value("candidates_min", cfg.candidates_min);
    cfg.candidates_max = j.value("candidates_max", cfg.candidates_max);
    cfg.trap_fraction = j.value("trap_fraction", cfg.trap_fraction);
    cfg.p_extra_bad = j.value("p_extra_bad", cfg.p_extra_bad);
    if (j.contains("good_models")) cfg.good_models = j.at("good_models").get<std::vector<std::string>>();
    if (j.contains("bad_models")) cfg.bad_models = j.at("bad_models").get<std::vector<std::string>>();
    if (j.contains("device_models")) {
        cfg.device_models = j.at("device_models").get<std::vector<std::string>>();
    }
    if (j.contains("good_time")) cfg.good_time = latency_dist_from_json(j.at("good_time"));
    if (j.contains("bad_success_time")) {
        cfg.bad_success_time = latency_dist_from_json(j.at("bad_success_time"));
    }
    cfg.good_p_fail = j.value("good_p_fail", cfg.good_p_fail);
    cfg.bad_p_fail = j.value("bad_p_fail", cfg.bad_p_fail);
    cfg.strongest_rssi_min = j.value("strongest_rssi_min", cfg.strongest_rssi_min);
    cfg.strongest_rssi_max = j.value("strongest_rssi_max", cfg.strongest_rssi_max);
    cfg.other_rssi_min = j.value("other_rssi_min", cfg.other_rssi_min);
    cfg.other_rssi_max = j.value("other_rssi_max", cfg.other_rssi_max);
    cfg.p_encrypted = j.value("p_encrypted", cfg.p_encrypted);
    return cfg;
}

json to_json(const CandidateGenConfig& cfg) {
    return json{{"kind", "candidates"},
                {"n_events", cfg.n_events},
                {"rng_seed", cfg.rng_seed},
                {"candidates_min", cfg.candidates_min},
                {"candidates_max", cfg.candidates_max},
                {"trap_fraction", cfg.trap_fraction},
                {"p_extra_bad", cfg.p_extra_bad},
                {"good_models", cfg.good_models},
                {"bad_models", cfg.bad_models},
                {"device_models", cfg.device_models},
                {"good_time", to_json(cfg.good_time)},
                {"bad_success_time", to_json(cfg.bad_success_time)},
                {"good_p_fail", cfg.good_p_fail},
                {"bad_p_fail", cfg.bad_p_fail},
                {"strongest_rssi_min", cfg.strongest_rssi_min},
                {"strongest_rssi_max", cfg.strongest_rssi_max},
                {"other_rssi_min", cfg.other_rssi_min},
                {"other_rssi_max", cfg.other_rssi_max},
                {"p_encrypted", cfg.p_encrypted}};
}

}  // namespace wifilab
