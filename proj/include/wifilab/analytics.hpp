#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wifilab/binning.hpp"
#include "wifilab/log_schema.hpp"
#include "wifilab/state_machine.hpp"

namespace wifilab {

// Successful attempts split by total time cost: [0,7s), [7s,15s), [15s,30s].
enum class TimeCostClass { C0to7s, C7to15s, C15to30s };

inline constexpr int kTimeCostClassCount = 3;

const char* to_string(TimeCostClass c);
std::optional<TimeCostClass> classify_time_cost(std::int64_t ms);
std::optional<TimeCostClass> time_cost_class_from_string(std::string_view s);

// Empirical step CDF: F(x) = fraction of samples <= x.
struct Cdf {
    std::vector<std::pair<double, double>> points;  // (value, F) at each distinct value

    double at(double x) const;
    bool empty() const { return points.empty(); }
};

Cdf make_cdf(std::vector<double> values);

// Nearest-rank quantile of a sorted sample; p in [0,1].
double quantile_nearest_rank(std::span<const double> sorted_values, double p);

// Fraction of attempts per outcome; fractions sum to 1. Throws on empty.
std::map<Outcome, double> outcome_proportions(std::span<const ConnectionAttempt> corpus);

// CDF of connection time over successful attempts. Throws when none succeed.
Cdf success_time_cdf(std::span<const ConnectionAttempt> corpus);

inline constexpr int kPhaseCount = 4;
const char* phase_name(int phase);  // scan, assoc, auth, dhcp

// Per time-cost class, the distribution of each phase's share of the total.
// Success-only; attempts without phase timings are skipped and counted.
struct PhaseBreakdown {
    struct ClassEntry {
        std::size_t n = 0;
        std::array<Cdf, kPhaseCount> proportion_cdf;
        std::array<double, kPhaseCount> mean_proportion{};
        std::array<double, kPhaseCount> median_proportion{};
    };
    std::map<TimeCostClass, ClassEntry> by_class;
    std::size_t skipped_no_phases = 0;
};

PhaseBreakdown phase_proportion_cdfs(std::span<const ConnectionAttempt> corpus);

// Scan-time quantiles for successful attempts of one class. Throws when the
// class is empty.
struct QuantileTable {
    std::vector<std::pair<double, double>> rows;  // (p, value)
    std::size_t n = 0;

    double at(double p) const;  // exact p lookup, throws if absent
};

QuantileTable scan_time_quantiles(std::span<const ConnectionAttempt> corpus, TimeCostClass cls,
                                  std::span<const double> ps = {});

struct TransitionMatrix {
    std::array<std::array<std::uint64_t, kConnStateCount>, kConnStateCount> counts{};

    std::uint64_t at(ConnState from, ConnState to) const {
        return counts[static_cast<std::size_t>(from)][static_cast<std::size_t>(to)];
    }
    std::uint64_t row_sum(ConnState from) const;
    std::uint64_t total() const;
};

TransitionMatrix transition_matrix(std::span<const TransitionTrace> traces);

struct RigResult {
    double value = 0.0;
    bool y_degenerate = false;  // single y bin: gain defined as 0
};

// Relative information gain (H(Y) - H(Y|X)) / H(Y) over the joint histogram
// of binned x and y. Plug-in entropies, any log base (it cancels).
RigResult relative_information_gain(std::span<const double> x, std::span<const double> y,
                                    const BinSpec& spec_x, const BinSpec& spec_y);
RigResult relative_information_gain(std::span<const std::string> x, std::span<const double> y,
                                    const BinSpec& spec_y);

// Kendall tau-b between bin keys and per-bin mean y. x is binned with spec_x;
// bin keys are distinct by construction so only y ties need the tie term.
// Throws when fewer than two bins are occupied.
double kendall_on_binned_means(std::span<const double> x, std::span<const double> y,
                               const BinSpec& spec_x);

struct FeatureCorrelation {
    std::string feature;
    double rig = 0.0;
    std::optional<double> kendall;  // absent for categorical features
};

struct CorrelationReport {
    std::vector<FeatureCorrelation> features;
    std::size_t n_success = 0;
};

// RIG (all five context features) and Kendall (numeric features only)
// against the success time cost, at the standard bin widths: hour 1,
// devices 10, RSSI 5 dBm, time 100 ms.
CorrelationReport correlation_report(std::span<const ConnectionAttempt> corpus);

enum class GroupKey { band, is_public, device_model, hour_of_day, user_id };

const char* to_string(GroupKey k);
std::optional<GroupKey> group_key_from_string(std::string_view s);

struct GroupStats {
    std::string key;
    std::size_t count = 0;
    std::size_t n_success = 0;
    double failure_rate = 0.0;
    // success-time quantiles; zero when the group has no successes
    double min_ms = 0.0, p25_ms = 0.0, p75_ms = 0.0, p90_ms = 0.0;
    Cdf success_cdf;
};

struct GroupCompareReport {
    std::vector<GroupStats> groups;   // ordered by key
    std::size_t excluded_missing_key = 0;
};

GroupCompareReport group_compare(std::span<const ConnectionAttempt> corpus, GroupKey key);

}  // namespace wifilab
