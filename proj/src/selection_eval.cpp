#include "wifilab/selection_eval.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "wifilab/rng.hpp"

namespace wifilab {

using nlohmann::json;

std::optional<std::string> validate(const CandidateSet& cs) {
    if (cs.candidates.empty()) return "candidate set is empty";
    std::set<std::string> ids;
    for (const auto& c : cs.candidates) {
        if (!ids.insert(c.id).second) return "duplicate candidate id '" + c.id + "'";
        if (c.truth_outcome) {
            if (!is_willing(*c.truth_outcome)) return "ground truth outcome must be willing";
            const bool success = *c.truth_outcome == Outcome::Success;
            if (success != c.truth_time_ms.has_value()) {
                return "ground truth time must be present exactly for Success";
            }
        } else if (c.truth_time_ms) {
            return "ground truth time without outcome";
        }
    }
    return std::nullopt;
}

namespace {

const Candidate* strongest(const std::vector<const Candidate*>& cands) {
    const Candidate* best = nullptr;
    for (const Candidate* c : cands) {
        if (!best || c->rssi_dbm > best->rssi_dbm ||
            (c->rssi_dbm == best->rssi_dbm && c->id < best->id)) {
            best = c;
        }
    }
    return best;
}

}  // namespace

SelectionDecision select_ml(const ForestModel& model, const CandidateSet& cs) {
    if (auto err = validate(cs)) throw std::invalid_argument("bad candidate set: " + *err);
    SelectionDecision d;
    std::vector<const Candidate*> fast, all;
    for (const auto& c : cs.candidates) {
        const FeatureVector fv = encode_features(cs.hour_of_day, c.rssi_dbm, cs.device_model,
                                                 c.ap_model, c.encrypted, model.encoders);
        if (model.predict(fv).label == SpeedLabel::FAST) {
            d.fast_ids.push_back(c.id);
            fast.push_back(&c);
        } else {
            d.slow_ids.push_back(c.id);
        }
        all.push_back(&c);
    }
    if (!fast.empty()) {
        d.chosen_id = strongest(fast)->id;
    } else {
        d.fallback_used = true;
        d.chosen_id = strongest(all)->id;
    }
    return d;
}

SelectionDecision select_baseline(const CandidateSet& cs) {
    if (auto err = validate(cs)) throw std::invalid_argument("bad candidate set: " + *err);
    SelectionDecision d;
    std::vector<const Candidate*> all;
    for (const auto& c : cs.candidates) all.push_back(&c);
    d.chosen_id = strongest(all)->id;
    return d;
}

double poa(std::size_t n_fast, std::size_t n_slow) {
    if (n_fast + n_slow == 0) throw std::invalid_argument("no classified candidates");
    return static_cast<double>(n_fast) / static_cast<double>(n_fast + n_slow);
}

double poa(std::span<const SelectionDecision> decisions) {
    std::size_t f = 0, s = 0;
    for (const auto& d : decisions) {
        f += d.fast_ids.size();
        s += d.slow_ids.size();
    }
    return poa(f, s);
}

namespace {

bool has_full_truth(const CandidateSet& cs) {
    for (const auto& c : cs.candidates) {
        if (!c.truth_outcome) return false;
    }
    return true;
}

std::int64_t scored_time(const Candidate& c) {
    return *c.truth_outcome == Outcome::Success ? *c.truth_time_ms : kFailureScoreMs;
}

const Candidate& find_candidate(const CandidateSet& cs, const std::string& id) {
    for (const auto& c : cs.candidates) {
        if (c.id == id) return c;
    }
    throw std::logic_error("chosen candidate not in set");
}

}  // namespace

EvalReport what_if_eval(std::span<const CandidateSet> events, const WhatIfConfig& cfg) {
    EvalReport rep;
    rep.remote_rtt_ms = cfg.remote_rtt_ms;

    std::vector<const CandidateSet*> usable;
    for (const auto& cs : events) {
        if (auto err = validate(cs)) throw std::invalid_argument("bad candidate set: " + *err);
        if (has_full_truth(cs)) {
            usable.push_back(&cs);
        } else {
            rep.n_excluded += 1;
        }
    }
    if (usable.size() < 2) throw std::invalid_argument("need at least two replayable events");

    // Deterministic 50/50 partition of the usable events.
    std::vector<std::size_t> order(usable.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng = make_rng(cfg.split_seed, 0x51u);
    deterministic_shuffle(order, rng);
    const std::size_t n_train = usable.size() / 2;
    rep.n_train_events = n_train;
    rep.n_eval_events = usable.size() - n_train;

    // Encoders and labels come from the tuning half only; the eval half is
    // never seen at training time.
    std::vector<ConnectionAttempt> train_context;
    for (std::size_t i = 0; i < n_train; ++i) {
        const CandidateSet& cs = *usable[order[i]];
        for (const auto& c : cs.candidates) {
            ConnectionAttempt a;
            a.device_model = cs.device_model;
            a.ap_model = c.ap_model;
            train_context.push_back(std::move(a));
        }
    }
    const EncoderPair encoders = fit_encoders(train_context, cfg.encoder_min_count);

    auto to_row = [&](const CandidateSet& cs, const Candidate& c) {
        LabeledRow row;
        row.features = encode_features(cs.hour_of_day, c.rssi_dbm, cs.device_model, c.ap_model,
                                       c.encrypted, encoders);
        const bool fast = *c.truth_outcome == Outcome::Success &&
                          *c.truth_time_ms <= cfg.fast_threshold_ms;
        row.label = fast ? SpeedLabel::FAST : SpeedLabel::SLOW;
        return row;
    };

    std::vector<LabeledRow> train_rows;
    for (std::size_t i = 0; i < n_train; ++i) {
        const CandidateSet& cs = *usable[order[i]];
        for (const auto& c : cs.candidates) train_rows.push_back(to_row(cs, c));
    }
    const ForestModel model = train_forest(train_rows, cfg.forest, encoders);

    // Replay both policies on the held-out half.
    std::vector<double> baseline_scored, ml_scored;
    std::size_t baseline_failures = 0, ml_failures = 0;
    std::size_t n_fast_cls = 0, n_slow_cls = 0;
    std::vector<LabeledRow> eval_rows;

    for (std::size_t i = n_train; i < usable.size(); ++i) {
        const CandidateSet& cs = *usable[order[i]];
        for (const auto& c : cs.candidates) eval_rows.push_back(to_row(cs, c));

        const SelectionDecision base = select_baseline(cs);
        const Candidate& base_choice = find_candidate(cs, base.chosen_id);
        baseline_scored.push_back(static_cast<double>(scored_time(base_choice)));
        if (*base_choice.truth_outcome != Outcome::Success) ++baseline_failures;

        const SelectionDecision ml = select_ml(model, cs);
        const Candidate& ml_choice = find_candidate(cs, ml.chosen_id);
        ml_scored.push_back(static_cast<double>(scored_time(ml_choice)));
        if (*ml_choice.truth_outcome != Outcome::Success) ++ml_failures;
        if (ml.fallback_used) rep.ml.fallback_count += 1;
        n_fast_cls += ml.fast_ids.size();
        n_slow_cls += ml.slow_ids.size();
    }

    const auto n_eval = static_cast<double>(rep.n_eval_events);
    rep.baseline.name = "strongest_signal";
    rep.baseline.failure_rate = static_cast<double>(baseline_failures) / n_eval;
    rep.baseline.n_events = rep.n_eval_events;
    {
        std::vector<double> sorted = baseline_scored;
        std::sort(sorted.begin(), sorted.end());
        rep.baseline.p80_ms = quantile_nearest_rank(sorted, 0.80);
    }
    rep.baseline.scored_cdf = make_cdf(std::move(baseline_scored));

    rep.ml.name = "ml_selection";
    rep.ml.failure_rate = static_cast<double>(ml_failures) / n_eval;
    rep.ml.n_events = rep.n_eval_events;
    {
        std::vector<double> sorted = ml_scored;
        std::sort(sorted.begin(), sorted.end());
        rep.ml.p80_ms = quantile_nearest_rank(sorted, 0.80);
    }
    rep.ml.scored_cdf = make_cdf(std::move(ml_scored));

    rep.poa = poa(n_fast_cls, n_slow_cls);
    rep.model_metrics = evaluate_forest(model, eval_rows);
    return rep;
}

// ---------------------------------------------------------------------------
// JSON

json to_json(const MetricsReport& m) {
    auto opt = [](const std::optional<double>& v) {
        return v ? json(*v) : json(nullptr);
    };
    return json{{"n_test", m.n_test},
                {"confusion",
                 {{"fast_fast", m.confusion[0][0]},
                  {"fast_slow", m.confusion[0][1]},
                  {"slow_fast", m.confusion[1][0]},
                  {"slow_slow", m.confusion[1][1]}}},
                {"precision_fast", opt(m.precision_fast)},
                {"recall_fast", opt(m.recall_fast)},
                {"precision_slow", opt(m.precision_slow)},
                {"recall_slow", opt(m.recall_slow)}};
}

namespace {

json to_json(const AlgorithmOutcome& a) {
    json cdf = json::array();
    for (const auto& [x, f] : a.scored_cdf.points) cdf.push_back({{"x_ms", x}, {"cdf", f}});
    return json{{"name", a.name},
                {"failure_rate", a.failure_rate},
                {"p80_ms", a.p80_ms},
                {"n_events", a.n_events},
                {"fallback_count", a.fallback_count},
                {"scored_cdf", cdf}};
}

}  // namespace

json to_json(const EvalReport& r) {
    json j{{"baseline", to_json(r.baseline)},
           {"ml", to_json(r.ml)},
           {"poa", r.poa},
           {"model_metrics", to_json(r.model_metrics)},
           {"n_train_events", r.n_train_events},
           {"n_eval_events", r.n_eval_events},
           {"n_excluded", r.n_excluded}};
    if (r.remote_rtt_ms) j["remote_rtt_ms"] = *r.remote_rtt_ms;
    return j;
}

json to_json(const SelectionDecision& d, const std::string& event_id) {
    return json{{"event_id", event_id},
                {"chosen_id", d.chosen_id},
                {"fallback_used", d.fallback_used},
                {"fast_ids", d.fast_ids},
                {"slow_ids", d.slow_ids}};
}

void write_candidate_sets_jsonl(std::span<const CandidateSet> sets, std::ostream& out) {
    for (const auto& cs : sets) {
        json cands = json::array();
        for (const auto& c : cs.candidates) {
            json cj{{"id", c.id},
                    {"ap_model", c.ap_model},
                    {"rssi_dbm", c.rssi_dbm},
                    {"encrypted", c.encrypted}};
            if (c.truth_outcome) cj["outcome"] = to_string(*c.truth_outcome);
            if (c.truth_time_ms) cj["connection_time_ms"] = *c.truth_time_ms;
            cands.push_back(std::move(cj));
        }
        out << json{{"event_id", cs.event_id},
                    {"hour_of_day", cs.hour_of_day},
                    {"device_model", cs.device_model},
                    {"candidates", cands}}
                   .dump()
            << '\n';
    }
}

std::vector<CandidateSet> read_candidate_sets_jsonl(std::istream& in) {
    std::vector<CandidateSet> sets;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            throw std::runtime_error("malformed candidate JSON at line " + std::to_string(line_no));
        }
        CandidateSet cs;
        cs.event_id = j.at("event_id").get<std::string>();
        cs.hour_of_day = j.at("hour_of_day").get<int>();
        cs.device_model = j.at("device_model").get<std::string>();
        for (const json& cj : j.at("candidates")) {
            Candidate c;
            c.id = cj.at("id").get<std::string>();
            c.ap_model = cj.at("ap_model").get<std::string>();
            c.rssi_dbm = cj.at("rssi_dbm").get<int>();
            c.encrypted = cj.at("encrypted").get<bool>();
            if (cj.contains("outcome")) {
                auto o = outcome_from_string(cj.at("outcome").get<std::string>());
                if (!o) {
                    throw std::runtime_error("unknown outcome at line " + std::to_string(line_no));
                }
                c.truth_outcome = *o;
            }
            if (cj.contains("connection_time_ms")) {
                c.truth_time_ms = cj.at("connection_time_ms").get<std::int64_t>();
            }
            cs.candidates.push_back(std::move(c));
        }
        if (auto err = validate(cs)) {
            throw std::runtime_error("invalid candidate set at line " + std::to_string(line_no) +
                                     ": " + *err);
        }
        sets.push_back(std::move(cs));
    }
    return sets;
}

std::vector<CandidateSet> read_candidate_sets_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    return read_candidate_sets_jsonl(in);
}

}  // namespace wifilab
