#include "wifilab/corpus_gen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

#include "wifilab/rng.hpp"

namespace wifilab {

using nlohmann::json;

namespace {

// Relative busyness per hour of day: quiet overnight, lunch and dinner peaks.
constexpr std::array<double, 24> kHourShape = {
    0.00, 0.00, 0.00, 0.00, 0.00, 0.05, 0.15, 0.35, 0.55, 0.65, 0.75, 0.90,
    1.00, 0.90, 0.75, 0.70, 0.70, 0.80, 0.95, 1.00, 0.85, 0.60, 0.30, 0.10,
};

template <typename T>
std::size_t weighted_pick(std::mt19937_64& rng, const std::vector<T>& items) {
    double total = 0.0;
    for (const auto& it : items) total += it.weight;
    double u = uniform01(rng) * total;
    for (std::size_t i = 0; i < items.size(); ++i) {
        u -= items[i].weight;
        if (u < 0.0) return i;
    }
    return items.size() - 1;
}

std::string pad_id(const char* prefix, std::size_t n, int digits) {
    std::string s = std::to_string(n);
    if (static_cast<int>(s.size()) < digits) s.insert(0, static_cast<std::size_t>(digits) - s.size(), '0');
    return std::string(prefix) + s;
}

double clamp01(double p) { return std::min(1.0, std::max(0.0, p)); }

}  // namespace

std::optional<std::string> validate(const CorpusConfig& cfg) {
    if (cfg.templates.empty()) return "no scenario templates";
    double wsum = 0.0;
    for (const auto& t : cfg.templates) {
        if (t.weight < 0) return "negative template weight";
        wsum += t.weight;
        if (!t.outcome_override) {
            if (auto err = validate(t.scenario)) return "template '" + t.name + "': " + *err;
            if (t.scenario.timeout_ms > kAttemptTimeoutMs) {
                return "template '" + t.name + "': timeout above the log schema ceiling";
            }
        } else if (*t.outcome_override == Outcome::Success) {
            return "template '" + t.name + "': Success cannot be stamped, run the scenario";
        }
    }
    if (std::abs(wsum - 1.0) > 1e-6) return "template weights must sum to 1";
    if (cfg.device_models.empty()) return "device model universe is empty";
    if (cfg.ap_models.empty()) return "AP model universe is empty";
    if (cfg.users.count <= 0) return "user universe is empty";
    if (cfg.users.fail_mult_min < 0 || cfg.users.fail_mult_max < cfg.users.fail_mult_min) {
        return "user failure multipliers invalid";
    }
    if (cfg.rssi.min_dbm > cfg.rssi.max_dbm) return "rssi range inverted";
    if (cfg.instrumented_fraction < 0 || cfg.instrumented_fraction > 1) {
        return "instrumented_fraction out of [0,1]";
    }
    return std::nullopt;
}

namespace {

struct AttemptDraw {
    ConnectionAttempt attempt;
    std::optional<TransitionTrace> trace;
};

double user_fail_mult(const UserPopulation& users, int user_idx) {
    if (users.count <= 1) return users.fail_mult_min;
    const double frac = static_cast<double>(user_idx) / static_cast<double>(users.count - 1);
    return users.fail_mult_min + frac * (users.fail_mult_max - users.fail_mult_min);
}

AttemptDraw generate_one(const CorpusConfig& cfg, std::size_t i) {
    std::mt19937_64 rng = make_rng(cfg.rng_seed, 1000 + i);

    AttemptDraw out;
    ConnectionAttempt& a = out.attempt;
    a.attempt_id = pad_id("att-", i, 8);

    const int user_idx = static_cast<int>(uniform_int(rng, 0, cfg.users.count - 1));
    a.user_id = pad_id("u-", static_cast<std::size_t>(user_idx), 5);
    const DeviceModelSpec& dev = cfg.device_models[weighted_pick(rng, cfg.device_models)];
    const ApModelSpec& ap = cfg.ap_models[weighted_pick(rng, cfg.ap_models)];
    a.device_model = dev.id;
    a.ap_model = ap.id;
    a.is_public = ap.is_public;
    a.band = ap.band;
    a.hour_of_day = static_cast<int>(uniform_int(rng, 0, 23));
    const int rssi_raw = static_cast<int>(uniform_int(rng, cfg.rssi.min_dbm, cfg.rssi.max_dbm));
    a.rssi_dbm = std::min(rssi_raw, kRssiCeilingDbm);
    a.num_devices =
        cfg.num_devices.max > 0 ? static_cast<int>(uniform_int(rng, 0, cfg.num_devices.max)) : 0;
    const bool instrumented = bernoulli(rng, cfg.instrumented_fraction);

    // Template choice, with failure-group weights scaled by the user's
    // propensity.
    const double fail_mult = user_fail_mult(cfg.users, user_idx);
    double total_w = 0.0;
    for (const auto& t : cfg.templates) total_w += t.weight * (t.failure_group ? fail_mult : 1.0);
    double u = uniform01(rng) * total_w;
    const ScenarioTemplate* tpl = &cfg.templates.back();
    for (const auto& t : cfg.templates) {
        u -= t.weight * (t.failure_group ? fail_mult : 1.0);
        if (u < 0.0) {
            tpl = &t;
            break;
        }
    }

    if (tpl->outcome_override) {
        a.outcome = *tpl->outcome_override;
        a.encrypted = (a.outcome == Outcome::WrongPassword) ? true : tpl->scenario.encrypted;
        validate_or_throw(a);
        return out;
    }

    ScenarioConfig sc = tpl->scenario;
    sc.rng_seed = derive_seed(cfg.rng_seed, 0x5150000000000000ULL + i);
    if (tpl->scale_latency) {
        const int weak_dbm = std::max(0, kRssiCeilingDbm - a.rssi_dbm);
        const double lat_mult = dev.latency_mult * ap.latency_mult *
                                (1.0 + cfg.rssi.latency_mult_per_dbm * weak_dbm) *
                                (1.0 + cfg.hours.amplitude *
                                           kHourShape[static_cast<std::size_t>(a.hour_of_day)]) *
                                (1.0 + cfg.num_devices.latency_mult_per_device * a.num_devices);
        const double loss_mult = dev.loss_mult * ap.loss_mult *
                                 (1.0 + cfg.rssi.loss_mult_per_dbm * weak_dbm);
        sc.phase_latency.scan = sc.phase_latency.scan.scaled(lat_mult);
        sc.phase_latency.assoc = sc.phase_latency.assoc.scaled(lat_mult);
        sc.phase_latency.auth = sc.phase_latency.auth.scaled(lat_mult);
        sc.phase_latency.dhcp = sc.phase_latency.dhcp.scaled(lat_mult);
        sc.p_loss_probe = clamp01(sc.p_loss_probe * loss_mult);
        sc.p_loss_assoc = clamp01(sc.p_loss_assoc * loss_mult);
        sc.p_loss_auth = clamp01(sc.p_loss_auth * loss_mult);
        sc.p_loss_dhcp = clamp01(sc.p_loss_dhcp * loss_mult);
    }

    AttemptResult res = run_attempt(sc);
    a.encrypted = res.attempt.encrypted;
    a.outcome = res.attempt.outcome;
    a.connection_time_ms = res.attempt.connection_time_ms;
    if (instrumented) a.phases = res.attempt.phases;
    validate_or_throw(a);

    res.trace.attempt_id = a.attempt_id;
    out.trace = std::move(res.trace);
    return out;
}

}  // namespace

GeneratedCorpus generate_corpus(const CorpusConfig& cfg) {
    if (auto err = validate(cfg)) throw std::invalid_argument("bad corpus config: " + *err);

    GeneratedCorpus out;
    out.attempts.reserve(cfg.n_attempts);
    for (std::size_t i = 0; i < cfg.n_attempts; ++i) {
        AttemptDraw d = generate_one(cfg, i);
        if (cfg.keep_traces && d.trace) out.traces.push_back(std::move(*d.trace));
        out.attempts.push_back(std::move(d.attempt));
    }

    // Achieved marginals vs configured targets.
    CalibrationReport& rep = out.calibration;
    rep.n_attempts = out.attempts.size();
    std::size_t n_success = 0, n_willing_fail = 0, n_under5 = 0, n_over15 = 0;
    for (const auto& a : out.attempts) {
        if (a.outcome == Outcome::Success) {
            ++n_success;
            if (*a.connection_time_ms < 5000) ++n_under5;
            if (*a.connection_time_ms > 15000) ++n_over15;
        } else if (is_willing(a.outcome)) {
            ++n_willing_fail;
        }
    }
    if (rep.n_attempts > 0) {
        const auto n = static_cast<double>(rep.n_attempts);
        rep.success_rate = n_success / n;
        rep.willing_failure_rate = n_willing_fail / n;
        rep.abandon_rate = 1.0 - rep.success_rate - rep.willing_failure_rate;
    }
    if (n_success > 0) {
        rep.frac_success_under_5s = static_cast<double>(n_under5) / static_cast<double>(n_success);
        rep.frac_success_over_15s = static_cast<double>(n_over15) / static_cast<double>(n_success);
    }

    auto check = [&](const char* name, const std::optional<double>& target, double achieved) {
        if (!target) return;
        CalibrationCheck c{name, *target, achieved, cfg.targets.tolerance,
                           std::abs(achieved - *target) <= cfg.targets.tolerance};
        rep.all_within = rep.all_within && c.within;
        rep.checks.push_back(std::move(c));
    };
    if (rep.n_attempts > 0) {
        check("success_rate", cfg.targets.success_rate, rep.success_rate);
        check("willing_failure_rate", cfg.targets.willing_failure_rate, rep.willing_failure_rate);
        check("frac_success_under_5s", cfg.targets.frac_success_under_5s,
              rep.frac_success_under_5s);
        check("frac_success_over_15s", cfg.targets.frac_success_over_15s,
              rep.frac_success_over_15s);
    }
    return out;
}

// ---------------------------------------------------------------------------
// JSON config surface

LatencyDist latency_dist_from_json(const json& j) {
    const auto family = j.at("family").get<std::string>();
    if (family == "constant") return LatencyDist::constant(j.at("value_ms").get<double>());
    if (family == "uniform") {
        return LatencyDist::uniform(j.at("lo_ms").get<double>(), j.at("hi_ms").get<double>());
    }
    if (family == "lognormal") {
        return LatencyDist::log_normal(j.at("median_ms").get<double>(),
                                       j.at("sigma").get<double>());
    }
    throw std::invalid_argument("unknown latency family '" + family + "'");
}

json to_json(const LatencyDist& d) {
    switch (d.family) {
        case LatencyDist::Family::Constant:
            return {{"family", "constant"}, {"value_ms", d.constant_ms}};
        case LatencyDist::Family::Uniform:
            return {{"family", "uniform"}, {"lo_ms", d.lo_ms}, {"hi_ms", d.hi_ms}};
        case LatencyDist::Family::LogNormal:
        default:
            return {{"family", "lognormal"}, {"median_ms", d.median_ms}, {"sigma", d.sigma}};
    }
}

ScenarioConfig scenario_from_json(const json& j) {
    ScenarioConfig cfg;
    cfg.p_loss_probe = j.value("p_loss_probe", 0.0);
    cfg.p_loss_assoc = j.value("p_loss_assoc", 0.0);
    cfg.p_loss_auth = j.value("p_loss_auth", 0.0);
    cfg.p_loss_dhcp = j.value("p_loss_dhcp", 0.0);
    if (j.contains("phase_latency")) {
        const json& p = j.at("phase_latency");
        cfg.phase_latency.scan = latency_dist_from_json(p.at("scan"));
        cfg.phase_latency.assoc = latency_dist_from_json(p.at("assoc"));
        cfg.phase_latency.auth = latency_dist_from_json(p.at("auth"));
        cfg.phase_latency.dhcp = latency_dist_from_json(p.at("dhcp"));
    }
    cfg.encrypted = j.value("encrypted", true);
    if (j.contains("enterprise") && !j.at("enterprise").is_null()) {
        const json& e = j.at("enterprise");
        cfg.enterprise = EapParams{e.value("n_e", 4), e.value("t_w_ms", std::int64_t{0}),
                                   e.value("t_a_ms", std::int64_t{0})};
    }
    cfg.timeout_ms = j.value("timeout_ms", kAttemptTimeoutMs);
    cfg.rng_seed = j.value("rng_seed", std::uint64_t{0});
    return cfg;
}

json to_json(const ScenarioConfig& cfg) {
    json j{{"p_loss_probe", cfg.p_loss_probe},
           {"p_loss_assoc", cfg.p_loss_assoc},
           {"p_loss_auth", cfg.p_loss_auth},
           {"p_loss_dhcp", cfg.p_loss_dhcp},
           {"phase_latency",
            {{"scan", to_json(cfg.phase_latency.scan)},
             {"assoc", to_json(cfg.phase_latency.assoc)},
             {"auth", to_json(cfg.phase_latency.auth)},
             {"dhcp", to_json(cfg.phase_latency.dhcp)}}},
           {"encrypted", cfg.encrypted},
           {"timeout_ms", cfg.timeout_ms},
           {"rng_seed", cfg.rng_seed}};
    if (cfg.enterprise) {
        j["enterprise"] = {{"n_e", cfg.enterprise->n_e},
                           {"t_w_ms", cfg.enterprise->t_w_ms},
                           {"t_a_ms", cfg.enterprise->t_a_ms}};
    }
    return j;
}

CorpusConfig corpus_config_from_json(const json& j) {
    CorpusConfig cfg;
    cfg.n_attempts = j.at("n_attempts").get<std::size_t>();
    cfg.rng_seed = j.value("rng_seed", std::uint64_t{0});
    for (const json& t : j.at("templates")) {
        ScenarioTemplate tpl;
        tpl.name = t.value("name", "");
        tpl.weight = t.at("weight").get<double>();
        if (t.contains("outcome_override") && !t.at("outcome_override").is_null()) {
            const auto s = t.at("outcome_override").get<std::string>();
            auto o = outcome_from_string(s);
            if (!o) throw std::invalid_argument("unknown outcome_override '" + s + "'");
            tpl.outcome_override = *o;
        }
        if (t.contains("scenario")) tpl.scenario = scenario_from_json(t.at("scenario"));
        tpl.failure_group = t.value("failure_group", false);
        tpl.scale_latency = t.value("scale_latency", true);
        cfg.templates.push_back(std::move(tpl));
    }
    for (const json& d : j.at("device_models")) {
        cfg.device_models.push_back({d.at("id").get<std::string>(), d.value("weight", 1.0),
                                     d.value("latency_mult", 1.0), d.value("loss_mult", 1.0)});
    }
    for (const json& apj : j.at("ap_models")) {
        ApModelSpec ap;
        ap.id = apj.at("id").get<std::string>();
        ap.weight = apj.value("weight", 1.0);
        ap.latency_mult = apj.value("latency_mult", 1.0);
        ap.loss_mult = apj.value("loss_mult", 1.0);
        if (apj.contains("is_public") && !apj.at("is_public").is_null()) {
            ap.is_public = apj.at("is_public").get<bool>();
        }
        if (apj.contains("band") && !apj.at("band").is_null()) {
            auto b = band_from_string(apj.at("band").get<std::string>());
            if (!b) throw std::invalid_argument("unknown band in ap model");
            ap.band = *b;
        }
        cfg.ap_models.push_back(std::move(ap));
    }
    if (j.contains("users")) {
        const json& u = j.at("users");
        cfg.users = {u.value("count", 100), u.value("fail_mult_min", 1.0),
                     u.value("fail_mult_max", 1.0)};
    }
    if (j.contains("rssi")) {
        const json& r = j.at("rssi");
        cfg.rssi = {r.value("min_dbm", -95), r.value("max_dbm", -45),
                    r.value("latency_mult_per_dbm", 0.0), r.value("loss_mult_per_dbm", 0.0)};
    }
    if (j.contains("hours")) cfg.hours.amplitude = j.at("hours").value("amplitude", 0.0);
    if (j.contains("num_devices")) {
        const json& n = j.at("num_devices");
        cfg.num_devices = {n.value("max", 0), n.value("latency_mult_per_device", 0.0)};
    }
    cfg.instrumented_fraction = j.value("instrumented_fraction", 1.0);
    if (j.contains("targets")) {
        const json& t = j.at("targets");
        auto opt = [&](const char* k) -> std::optional<double> {
            if (t.contains(k) && !t.at(k).is_null()) return t.at(k).get<double>();
            return std::nullopt;
        };
        cfg.targets.success_rate = opt("success_rate");
        cfg.targets.willing_failure_rate = opt("willing_failure_rate");
        cfg.targets.frac_success_under_5s = opt("frac_success_under_5s");
        cfg.targets.frac_success_over_15s = opt("frac_success_over_15s");
        cfg.targets.tolerance = t.value("tolerance", 0.015);
    }
    cfg.keep_traces = j.value("keep_traces", false);
    return cfg;
}

json to_json(const CorpusConfig& cfg) {
    json templates = json::array();
    for (const auto& t : cfg.templates) {
        json tj{{"name", t.name},
                {"weight", t.weight},
                {"scenario", to_json(t.scenario)},
                {"failure_group", t.failure_group},
                {"scale_latency", t.scale_latency}};
        if (t.outcome_override) tj["outcome_override"] = to_string(*t.outcome_override);
        templates.push_back(std::move(tj));
    }
    json devices = json::array();
    for (const auto& d : cfg.device_models) {
        devices.push_back({{"id", d.id},
                           {"weight", d.weight},
                           {"latency_mult", d.latency_mult},
                           {"loss_mult", d.loss_mult}});
    }
    json aps = json::array();
    for (const auto& ap : cfg.ap_models) {
        json apj{{"id", ap.id},
                 {"weight", ap.weight},
                 {"latency_mult", ap.latency_mult},
                 {"loss_mult", ap.loss_mult}};
        if (ap.is_public) apj["is_public"] = *ap.is_public;
        if (ap.band) apj["band"] = to_string(*ap.band);
        aps.push_back(std::move(apj));
    }
    json targets;
    if (cfg.targets.success_rate) targets["success_rate"] = *cfg.targets.success_rate;
    if (cfg.targets.willing_failure_rate) {
        targets["willing_failure_rate"] = *cfg.targets.willing_failure_rate;
    }
    if (cfg.targets.frac_success_under_5s) {
        targets["frac_success_under_5s"] = *cfg.targets.frac_success_under_5s;
    }
    if (cfg.targets.frac_success_over_15s) {
        targets["frac_success_over_15s"] = *cfg.targets.frac_success_over_15s;
    }
    targets["tolerance"] = cfg.targets.tolerance;

    return json{{"kind", "corpus"},
                {"n_attempts", cfg.n_attempts},
                {"rng_seed", cfg.rng_seed},
                {"templates", templates},
                {"device_models", devices},
                {"ap_models", aps},
                {"users",
                 {{"count", cfg.users.count},
                  {"fail_mult_min", cfg.users.fail_mult_min},
                  {"fail_mult_max", cfg.users.fail_mult_max}}},
                {"rssi",
                 {{"min_dbm", cfg.rssi.min_dbm},
                  {"max_dbm", cfg.rssi.max_dbm},
                  {"latency_mult_per_dbm", cfg.rssi.latency_mult_per_dbm},
                  {"loss_mult_per_dbm", cfg.rssi.loss_mult_per_dbm}}},
                {"hours", {{"amplitude", cfg.hours.amplitude}}},
                {"num_devices",
                 {{"max", cfg.num_devices.max},
                  {"latency_mult_per_device", cfg.num_devices.latency_mult_per_device}}},
                {"instrumented_fraction", cfg.instrumented_fraction},
                {"targets", targets},
                {"keep_traces", cfg.keep_traces}};
}

json to_json(const CalibrationReport& r) {
    json checks = json::array();
    for (const auto& c : r.checks) {
        checks.push_back({{"name", c.name},
                          {"target", c.target},
                          {"achieved", c.achieved},
                          {"tolerance", c.tolerance},
                          {"within", c.within}});
    }
    return json{{"n_attempts", r.n_attempts},
                {"success_rate", r.success_rate},
                {"willing_failure_rate", r.willing_failure_rate},
                {"abandon_rate", r.abandon_rate},
                {"frac_success_under_5s", r.frac_success_under_5s},
                {"frac_success_over_15s", r.frac_success_over_15s},
                {"checks", checks},
                {"all_within", r.all_within}};
}

void write_traces_jsonl(const std::vector<TransitionTrace>& traces, std::ostream& out) {
    for (const auto& t : traces) {
        json trs = json::array();
        for (const auto& tr : t.transitions) {
            trs.push_back(
                {{"from", to_string(tr.from)}, {"to", to_string(tr.to)}, {"at_ms", tr.at_ms}});
        }
        out << json{{"attempt_id", t.attempt_id}, {"transitions", trs}}.dump() << '\n';
    }
}

std::vector<TransitionTrace> read_traces_jsonl(std::istream& in) {
    std::vector<TransitionTrace> traces;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            throw std::runtime_error("malformed trace JSON at line " + std::to_string(line_no));
        }
        TransitionTrace t;
        t.attempt_id = j.at("attempt_id").get<std::string>();
        for (const json& trj : j.at("transitions")) {
            auto from = conn_state_from_string(trj.at("from").get<std::string>());
            auto to = conn_state_from_string(trj.at("to").get<std::string>());
            if (!from || !to) {
                throw std::runtime_error("unknown state name at line " + std::to_string(line_no));
            }
            t.transitions.push_back({*from, *to, trj.at("at_ms").get<std::int64_t>()});
        }
        traces.push_back(std::move(t));
    }
    return traces;
}

}  // namespace wifilab
