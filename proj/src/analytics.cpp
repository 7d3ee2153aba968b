#include "wifilab/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace wifilab {

namespace {

constexpr std::array<const char*, kTimeCostClassCount> kClassNames = {"0-7s", "7-15s", "15-30s"};
constexpr std::array<const char*, kPhaseCount> kPhaseNames = {"scan", "assoc", "auth", "dhcp"};
constexpr std::array<const char*, 5> kGroupKeyNames = {"band", "is_public", "device_model",
                                                       "hour_of_day", "user_id"};

constexpr std::array<double, 8> kDefaultQuantiles = {0.01, 0.05, 0.25, 0.50,
                                                     0.75, 0.90, 0.95, 0.99};

}  // namespace

const char* to_string(TimeCostClass c) {
    return kClassNames[static_cast<std::size_t>(c)];
}

std::optional<TimeCostClass> classify_time_cost(std::int64_t ms) {
    if (ms < 0 || ms > kAttemptTimeoutMs) return std::nullopt;
    if (ms < 7000) return TimeCostClass::C0to7s;
    if (ms < 15000) return TimeCostClass::C7to15s;
    return TimeCostClass::C15to30s;
}

std::optional<TimeCostClass> time_cost_class_from_string(std::string_view s) {
    for (int i = 0; i < kTimeCostClassCount; ++i) {
        if (s == kClassNames[static_cast<std::size_t>(i)]) return static_cast<TimeCostClass>(i);
    }
    return std::nullopt;
}

double Cdf::at(double x) const {
    // F is a right-continuous step function; find the last point <= x.
    auto it = std::upper_bound(points.begin(), points.end(), x,
                               [](double v, const auto& p) { return v < p.first; });
    if (it == points.begin()) return 0.0;
    return std::prev(it)->second;
}

Cdf make_cdf(std::vector<double> values) {
    Cdf cdf;
    if (values.empty()) return cdf;
    std::sort(values.begin(), values.end());
    const auto n = static_cast<double>(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i + 1 == values.size() || values[i + 1] != values[i]) {
            cdf.points.emplace_back(values[i], static_cast<double>(i + 1) / n);
        }
    }
    return cdf;
}

double quantile_nearest_rank(std::span<const double> sorted_values, double p) {
    if (sorted_values.empty()) throw std::invalid_argument("quantile of empty sample");
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("quantile p out of [0,1]");
    if (p == 0.0) return sorted_values.front();
    const auto n = sorted_values.size();
    auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(n)));
    if (rank == 0) rank = 1;
    if (rank > n) rank = n;
    return sorted_values[rank - 1];
}

std::map<Outcome, double> outcome_proportions(std::span<const ConnectionAttempt> corpus) {
    if (corpus.empty()) throw std::invalid_argument("empty corpus");
    std::array<std::size_t, kOutcomeCount> counts{};
    for (const auto& a : corpus) counts[static_cast<std::size_t>(a.outcome)] += 1;
    std::map<Outcome, double> out;
    for (int i = 0; i < kOutcomeCount; ++i) {
        if (counts[static_cast<std::size_t>(i)] == 0) continue;
        out[static_cast<Outcome>(i)] = static_cast<double>(counts[static_cast<std::size_t>(i)]) /
                                       static_cast<double>(corpus.size());
    }
    return out;
}

namespace {

std::vector<double> success_times(std::span<const ConnectionAttempt> corpus) {
    std::vector<double> times;
    for (const auto& a : corpus) {
        if (a.outcome == Outcome::Success) times.push_back(static_cast<double>(*a.connection_time_ms));
    }
    return times;
}

}  // namespace

Cdf success_time_cdf(std::span<const ConnectionAttempt> corpus) {
    auto times = success_times(corpus);
    if (times.empty()) throw std::invalid_argument("no successful attempts");
    return make_cdf(std::move(times));
}

const char* phase_name(int phase) {
    return kPhaseNames[static_cast<std::size_t>(phase)];
}

PhaseBreakdown phase_proportion_cdfs(std::span<const ConnectionAttempt> corpus) {
    PhaseBreakdown out;
    std::map<TimeCostClass, std::array<std::vector<double>, kPhaseCount>> shares;
    for (const auto& a : corpus) {
        if (a.outcome != Outcome::Success) continue;
        if (!a.phases) {
            out.skipped_no_phases += 1;
            continue;
        }
        const auto cls = classify_time_cost(*a.connection_time_ms);
        if (!cls) continue;
        const auto total = static_cast<double>(a.phases->total());
        if (total <= 0) continue;
        auto& vecs = shares[*cls];
        vecs[0].push_back(static_cast<double>(a.phases->scan_ms) / total);
        vecs[1].push_back(static_cast<double>(a.phases->assoc_ms) / total);
        vecs[2].push_back(static_cast<double>(a.phases->auth_ms) / total);
        vecs[3].push_back(static_cast<double>(a.phases->dhcp_ms) / total);
    }
    for (auto& [cls, vecs] : shares) {
        PhaseBreakdown::ClassEntry entry;
        entry.n = vecs[0].size();
        for (int p = 0; p < kPhaseCount; ++p) {
            auto& v = vecs[static_cast<std::size_t>(p)];
            double sum = 0.0;
            for (double s : v) sum += s;
            entry.mean_proportion[static_cast<std::size_t>(p)] =
                v.empty() ? 0.0 : sum / static_cast<double>(v.size());
            std::vector<double> sorted = v;
            std::sort(sorted.begin(), sorted.end());
            entry.median_proportion[static_cast<std::size_t>(p)] =
                sorted.empty() ? 0.0 : quantile_nearest_rank(sorted, 0.5);
            entry.proportion_cdf[static_cast<std::size_t>(p)] = make_cdf(std::move(v));
        }
        out.by_class.emplace(cls, std::move(entry));
    }
    return out;
}

double QuantileTable::at(double p) const {
    for (const auto& [q, v] : rows) {
        if (q == p) return v;
    }
    throw std::out_of_range("quantile not in table");
}

QuantileTable scan_time_quantiles(std::span<const ConnectionAttempt> corpus, TimeCostClass cls,
                                  std::span<const double> ps) {
    std::vector<double> scans;
    for (const auto& a : corpus) {
        if (a.outcome != Outcome::Success || !a.phases) continue;
        if (classify_time_cost(*a.connection_time_ms) != cls) continue;
        scans.push_back(static_cast<double>(a.phases->scan_ms));
    }
    if (scans.empty()) throw std::invalid_argument("no attempts in requested time-cost class");
    std::sort(scans.begin(), scans.end());
    QuantileTable table;
    table.n = scans.size();
    const std::span<const double> use =
        ps.empty() ? std::span<const double>(kDefaultQuantiles) : ps;
    for (double p : use) table.rows.emplace_back(p, quantile_nearest_rank(scans, p));
    return table;
}

std::uint64_t TransitionMatrix::row_sum(ConnState from) const {
    std::uint64_t s = 0;
    for (auto c : counts[static_cast<std::size_t>(from)]) s += c;
    return s;
}

std::uint64_t TransitionMatrix::total() const {
    std::uint64_t s = 0;
    for (int i = 0; i < kConnStateCount; ++i) s += row_sum(static_cast<ConnState>(i));
    return s;
}

TransitionMatrix transition_matrix(std::span<const TransitionTrace> traces) {
    TransitionMatrix m;
    for (const auto& t : traces) {
        for (const auto& tr : t.transitions) {
            m.counts[static_cast<std::size_t>(tr.from)][static_cast<std::size_t>(tr.to)] += 1;
        }
    }
    return m;
}

namespace {

// Dense relabeling of arbitrary bin keys to 0..k-1.
std::vector<std::size_t> compress(const std::vector<std::int64_t>& keys, std::size_t& k_out) {
    std::unordered_map<std::int64_t, std::size_t> dense;
    std::vector<std::size_t> out;
    out.reserve(keys.size());
    for (auto key : keys) {
        auto [it, inserted] = dense.emplace(key, dense.size());
        out.push_back(it->second);
    }
    k_out = dense.size();
    return out;
}

RigResult rig_from_codes(const std::vector<std::size_t>& xc, std::size_t kx,
                         const std::vector<std::size_t>& yc, std::size_t ky) {
    const std::size_t n = xc.size();
    RigResult res;
    if (ky <= 1) {
        res.y_degenerate = true;
        return res;
    }
    std::vector<double> joint(kx * ky, 0.0), px(kx, 0.0), py(ky, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        joint[xc[i] * ky + yc[i]] += 1.0;
        px[xc[i]] += 1.0;
        py[yc[i]] += 1.0;
    }
    const auto dn = static_cast<double>(n);
    double h_y = 0.0;
    for (double c : py) {
        if (c > 0.0) h_y -= (c / dn) * std::log(c / dn);
    }
    if (h_y <= 0.0) {
        res.y_degenerate = true;
        return res;
    }
    // H(Y|X) = sum_x p(x) * H(Y|X=x)
    double h_y_given_x = 0.0;
    for (std::size_t xi = 0; xi < kx; ++xi) {
        if (px[xi] <= 0.0) continue;
        double h = 0.0;
        for (std::size_t yi = 0; yi < ky; ++yi) {
            const double c = joint[xi * ky + yi];
            if (c > 0.0) h -= (c / px[xi]) * std::log(c / px[xi]);
        }
        h_y_given_x += (px[xi] / dn) * h;
    }
    res.value = std::clamp((h_y - h_y_given_x) / h_y, 0.0, 1.0);
    return res;
}

}  // namespace

RigResult relative_information_gain(std::span<const double> x, std::span<const double> y,
                                    const BinSpec& spec_x, const BinSpec& spec_y) {
    if (x.size() != y.size()) throw std::invalid_argument("x and y must have equal length");
    if (x.empty()) throw std::invalid_argument("empty input");
    std::size_t kx = 0, ky = 0;
    const auto xc = compress(bin_values(x, spec_x), kx);
    const auto yc = compress(bin_values(y, spec_y), ky);
    return rig_from_codes(xc, kx, yc, ky);
}

RigResult relative_information_gain(std::span<const std::string> x, std::span<const double> y,
                                    const BinSpec& spec_y) {
    if (x.size() != y.size()) throw std::invalid_argument("x and y must have equal length");
    if (x.empty()) throw std::invalid_argument("empty input");
    std::size_t kx = 0, ky = 0;
    const auto xc = compress(bin_values(x, BinSpec::categorical()), kx);
    const auto yc = compress(bin_values(y, spec_y), ky);
    return rig_from_codes(xc, kx, yc, ky);
}

namespace {

// Strict inversions in v (pairs i<j with v[i] > v[j]) by merge sort;
// equal elements are not counted.
std::uint64_t count_inversions(std::vector<double>& v, std::vector<double>& tmp, std::size_t lo,
                               std::size_t hi) {
    if (hi - lo <= 1) return 0;
    const std::size_t mid = lo + (hi - lo) / 2;
    std::uint64_t inv = count_inversions(v, tmp, lo, mid) + count_inversions(v, tmp, mid, hi);
    std::size_t i = lo, j = mid, k = lo;
    while (i < mid && j < hi) {
        if (v[j] < v[i]) {
            inv += mid - i;  // v[i..mid) all exceed v[j]
            tmp[k++] = v[j++];
        } else {
            tmp[k++] = v[i++];
        }
    }
    while (i < mid) tmp[k++] = v[i++];
    while (j < hi) tmp[k++] = v[j++];
    std::copy(tmp.begin() + static_cast<std::ptrdiff_t>(lo),
              tmp.begin() + static_cast<std::ptrdiff_t>(hi),
              v.begin() + static_cast<std::ptrdiff_t>(lo));
    return inv;
}

}  // namespace

double kendall_on_binned_means(std::span<const double> x, std::span<const double> y,
                               const BinSpec& spec_x) {
    if (x.size() != y.size()) throw std::invalid_argument("x and y must have equal length");
    const BinnedSeries series = binned_mean_curve(x, y, spec_x);
    const std::size_t m = series.bins.size();
    if (m < 2) throw std::invalid_argument("need at least two occupied bins");

    // Bins are already ordered by key, so tau-b reduces to inversion counting
    // over the mean sequence plus the y-tie correction.
    std::vector<double> means;
    means.reserve(m);
    for (const auto& b : series.bins) means.push_back(b.mean_y);

    std::map<double, std::uint64_t> multiplicity;
    for (double v : means) multiplicity[v] += 1;
    std::uint64_t ties_y = 0;
    for (const auto& [_, c] : multiplicity) ties_y += c * (c - 1) / 2;

    std::vector<double> work = means, tmp(m);
    const std::uint64_t discordant = count_inversions(work, tmp, 0, m);

    const std::uint64_t n0 = static_cast<std::uint64_t>(m) * (m - 1) / 2;
    const std::uint64_t concordant = n0 - ties_y - discordant;
    const double denom = std::sqrt(static_cast<double>(n0)) *
                         std::sqrt(static_cast<double>(n0 - ties_y));
    if (denom == 0.0) return 0.0;
    return (static_cast<double>(concordant) - static_cast<double>(discordant)) / denom;
}

namespace {

// A feature with a single occupied bin has no rank to correlate; the report
// marks it not-applicable instead of propagating the kendall error.
std::optional<double> kendall_or_na(std::span<const double> x, std::span<const double> y,
                                    const BinSpec& spec_x) {
    const auto idx = bin_values(x, spec_x);
    for (std::size_t i = 1; i < idx.size(); ++i) {
        if (idx[i] != idx[0]) return kendall_on_binned_means(x, y, spec_x);
    }
    return std::nullopt;
}

}  // namespace

CorrelationReport correlation_report(std::span<const ConnectionAttempt> corpus) {
    std::vector<double> y;
    std::vector<double> rssi, devices, hours;
    std::vector<std::string> device_models, ap_models;
    for (const auto& a : corpus) {
        if (a.outcome != Outcome::Success) continue;
        y.push_back(static_cast<double>(*a.connection_time_ms));
        rssi.push_back(static_cast<double>(a.rssi_dbm));
        devices.push_back(static_cast<double>(a.num_devices));
        hours.push_back(static_cast<double>(a.hour_of_day));
        device_models.push_back(a.device_model);
        ap_models.push_back(a.ap_model);
    }
    if (y.empty()) throw std::invalid_argument("no successful attempts");

    const BinSpec y_spec = BinSpec::numeric(100.0, 0.0);
    const BinSpec rssi_spec = BinSpec::numeric(5.0, -100.0);
    const BinSpec devices_spec = BinSpec::numeric(10.0, 0.0);
    const BinSpec hour_spec = BinSpec::numeric(1.0, 0.0);

    CorrelationReport rep;
    rep.n_success = y.size();
    rep.features.push_back(
        {"device_model", relative_information_gain(device_models, y, y_spec).value, std::nullopt});
    rep.features.push_back(
        {"ap_model", relative_information_gain(ap_models, y, y_spec).value, std::nullopt});
    rep.features.push_back({"rssi", relative_information_gain(rssi, y, rssi_spec, y_spec).value,
                            kendall_or_na(rssi, y, rssi_spec)});
    rep.features.push_back(
        {"num_devices", relative_information_gain(devices, y, devices_spec, y_spec).value,
         kendall_or_na(devices, y, devices_spec)});
    rep.features.push_back({"hour_of_day",
                            relative_information_gain(hours, y, hour_spec, y_spec).value,
                            kendall_or_na(hours, y, hour_spec)});
    return rep;
}

const char* to_string(GroupKey k) {
    return kGroupKeyNames[static_cast<std::size_t>(k)];
}

std::optional<GroupKey> group_key_from_string(std::string_view s) {
    for (std::size_t i = 0; i < kGroupKeyNames.size(); ++i) {
        if (s == kGroupKeyNames[i]) return static_cast<GroupKey>(i);
    }
    return std::nullopt;
}

GroupCompareReport group_compare(std::span<const ConnectionAttempt> corpus, GroupKey key) {
    auto key_of = [key](const ConnectionAttempt& a) -> std::optional<std::string> {
        switch (key) {
            case GroupKey::band:
                if (!a.band) return std::nullopt;
                return std::string(to_string(*a.band));
            case GroupKey::is_public:
                if (!a.is_public) return std::nullopt;
                return std::string(*a.is_public ? "public" : "private");
            case GroupKey::device_model:
                return a.device_model;
            case GroupKey::hour_of_day: {
                std::string h = std::to_string(a.hour_of_day);
                if (h.size() < 2) h.insert(0, "0");
                return h;
            }
            case GroupKey::user_id:
                return a.user_id;
        }
        return std::nullopt;
    };

    struct Acc {
        std::size_t count = 0;
        std::vector<double> times;
    };
    std::map<std::string, Acc> groups;
    GroupCompareReport rep;
    for (const auto& a : corpus) {
        auto k = key_of(a);
        if (!k) {
            rep.excluded_missing_key += 1;
            continue;
        }
        Acc& acc = groups[*k];
        acc.count += 1;
        if (a.outcome == Outcome::Success) {
            acc.times.push_back(static_cast<double>(*a.connection_time_ms));
        }
    }
    for (auto& [k, acc] : groups) {
        GroupStats g;
        g.key = k;
        g.count = acc.count;
        g.n_success = acc.times.size();
        g.failure_rate =
            1.0 - static_cast<double>(g.n_success) / static_cast<double>(g.count);
        if (!acc.times.empty()) {
            std::sort(acc.times.begin(), acc.times.end());
            g.min_ms = acc.times.front();
            g.p25_ms = quantile_nearest_rank(acc.times, 0.25);
            g.p75_ms = quantile_nearest_rank(acc.times, 0.75);
            g.p90_ms = quantile_nearest_rank(acc.times, 0.90);
            g.success_cdf = make_cdf(std::move(acc.times));
        }
        rep.groups.push_back(std::move(g));
    }
    return rep;
}

}  // namespace wifilab
