#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "wifilab/log_schema.hpp"

namespace wifilab {

enum class SpeedLabel { FAST, SLOW };

inline const char* to_string(SpeedLabel l) { return l == SpeedLabel::FAST ? "FAST" : "SLOW"; }

// Attempts above this total time are SLOW.
inline constexpr std::int64_t kFastThresholdMs = 15000;

// Scoring convention for failed willing attempts: they count as 30 s, which
// also makes them SLOW at any sensible threshold.
inline constexpr std::int64_t kFailureScoreMs = 30000;

// Labels one willing attempt. Success at or under the threshold is FAST;
// everything else (slower successes, timeouts, DHCP failures) is SLOW.
// Throws for non-willing outcomes.
SpeedLabel label_attempt(const ConnectionAttempt& a, std::int64_t threshold_ms = kFastThresholdMs);

// Maps high-cardinality categorical values to dense codes. Code 0 is reserved
// for unseen (or rare, below-floor) categories; vocabulary codes start at 1.
class CategoryEncoder {
public:
    static constexpr std::int32_t kUnseenCode = 0;

    CategoryEncoder() = default;

    // Vocabulary = categories seen at least min_count times, coded in
    // lexicographic order so fitting is order-independent.
    static CategoryEncoder fit(std::span<const std::string> values, std::size_t min_count = 1);

    std::int32_t encode(const std::string& value) const;
    std::size_t vocab_size() const { return vocab_.size(); }
    std::size_t rare_collapsed() const { return rare_collapsed_; }
    const std::map<std::string, std::int32_t>& vocabulary() const { return vocab_; }

    // Rebuild from (value, code) pairs, e.g. from a model file.
    static CategoryEncoder from_entries(std::vector<std::pair<std::string, std::int32_t>> entries);

    bool operator==(const CategoryEncoder& other) const { return vocab_ == other.vocab_; }

private:
    std::map<std::string, std::int32_t> vocab_;
    std::size_t rare_collapsed_ = 0;
};

// The five model inputs: hour of day, RSSI, AP model, device model, whether
// the AP is encrypted. num_devices is deliberately not an input (it is
// AP-side data a device cannot observe before connecting).
struct FeatureVector {
    double hour_of_day = 0.0;
    double rssi_dbm = 0.0;
    std::int32_t device_code = 0;
    std::int32_t ap_code = 0;
    bool encrypted = false;

    bool operator==(const FeatureVector&) const = default;
};

inline constexpr std::size_t kNumFeatures = 5;

enum class FeatureKind { Numeric, Categorical };

FeatureKind feature_kind(std::size_t feature);
const char* feature_name(std::size_t feature);

// Numeric view of feature f (categorical codes are exposed through
// category_code instead).
double numeric_value(const FeatureVector& fv, std::size_t feature);
std::int32_t category_code(const FeatureVector& fv, std::size_t feature);

struct EncoderPair {
    CategoryEncoder device;
    CategoryEncoder ap;

    bool operator==(const EncoderPair&) const = default;
};

struct EncoderStats {
    std::size_t device_vocab = 0;
    std::size_t ap_vocab = 0;
    std::size_t device_rare_collapsed = 0;
    std::size_t ap_rare_collapsed = 0;
};

// Fits both encoders over a corpus; categories seen fewer than min_count
// times collapse into the unseen code. Throws on an empty corpus.
EncoderPair fit_encoders(std::span<const ConnectionAttempt> corpus, std::size_t min_count = 5,
                         EncoderStats* stats = nullptr);

struct EncodeCounters {
    std::size_t unseen_device = 0;
    std::size_t unseen_ap = 0;
};

FeatureVector encode_features(int hour_of_day, int rssi_dbm, const std::string& device_model,
                              const std::string& ap_model, bool encrypted,
                              const EncoderPair& encoders, EncodeCounters* counters = nullptr);

FeatureVector encode_attempt(const ConnectionAttempt& a, const EncoderPair& encoders,
                             EncodeCounters* counters = nullptr);

}  // namespace wifilab
