#include "wifilab/feature_model.hpp"

#include <array>
#include <stdexcept>

namespace wifilab {

SpeedLabel label_attempt(const ConnectionAttempt& a, std::int64_t threshold_ms) {
    if (!is_willing(a.outcome)) {
        throw std::invalid_argument("cannot label a non-willing attempt");
    }
    if (a.outcome != Outcome::Success) return SpeedLabel::SLOW;  // scored as 30 s
    return *a.connection_time_ms <= threshold_ms ? SpeedLabel::FAST : SpeedLabel::SLOW;
}

CategoryEncoder CategoryEncoder::fit(std::span<const std::string> values, std::size_t min_count) {
    std::map<std::string, std::size_t> counts;
    for (const auto& v : values) counts[v] += 1;
    CategoryEncoder enc;
    std::int32_t next = 1;
    for (const auto& [value, count] : counts) {
        if (count >= min_count) {
            enc.vocab_.emplace(value, next++);
        } else {
            enc.rare_collapsed_ += 1;
        }
    }
    return enc;
}

std::int32_t CategoryEncoder::encode(const std::string& value) const {
    auto it = vocab_.find(value);
    return it == vocab_.end() ? kUnseenCode : it->second;
}

CategoryEncoder CategoryEncoder::from_entries(
    std::vector<std::pair<std::string, std::int32_t>> entries) {
    CategoryEncoder enc;
    for (auto& [value, code] : entries) {
        if (code == kUnseenCode) throw std::invalid_argument("vocabulary may not use code 0");
        if (!enc.vocab_.emplace(std::move(value), code).second) {
            throw std::invalid_argument("duplicate vocabulary entry");
        }
    }
    return enc;
}

namespace {

constexpr std::array<FeatureKind, kNumFeatures> kKinds = {
    FeatureKind::Numeric,      // hour_of_day
    FeatureKind::Numeric,      // rssi_dbm
    FeatureKind::Categorical,  // device_model
    FeatureKind::Categorical,  // ap_model
    FeatureKind::Numeric,      // encrypted (0/1)
};

constexpr std::array<const char*, kNumFeatures> kNames = {"hour_of_day", "rssi_dbm",
                                                          "device_model", "ap_model", "encrypted"};

}  // namespace

FeatureKind feature_kind(std::size_t feature) {
    return kKinds.at(feature);
}

const char* feature_name(std::size_t feature) {
    return kNames.at(feature);
}

double numeric_value(const FeatureVector& fv, std::size_t feature) {
    switch (feature) {
        case 0: return fv.hour_of_day;
        case 1: return fv.rssi_dbm;
        case 4: return fv.encrypted ? 1.0 : 0.0;
        default: throw std::invalid_argument("feature is not numeric");
    }
}

std::int32_t category_code(const FeatureVector& fv, std::size_t feature) {
    switch (feature) {
        case 2: return fv.device_code;
        case 3: return fv.ap_code;
        default: throw std::invalid_argument("feature is not categorical");
    }
}

EncoderPair fit_encoders(std::span<const ConnectionAttempt> corpus, std::size_t min_count,
                         EncoderStats* stats) {
    if (corpus.empty()) throw std::invalid_argument("empty corpus");
    std::vector<std::string> devices, aps;
    devices.reserve(corpus.size());
    aps.reserve(corpus.size());
    for (const auto& a : corpus) {
        devices.push_back(a.device_model);
        aps.push_back(a.ap_model);
    }
    EncoderPair pair{CategoryEncoder::fit(devices, min_count), CategoryEncoder::fit(aps, min_count)};
    if (stats) {
        stats->device_vocab = pair.device.vocab_size();
        stats->ap_vocab = pair.ap.vocab_size();
        stats->device_rare_collapsed = pair.device.rare_collapsed();
        stats->ap_rare_collapsed = pair.ap.rare_collapsed();
    }
    return pair;
}

FeatureVector encode_features(int hour_of_day, int rssi_dbm, const std::string& device_model,
                              const std::string& ap_model, bool encrypted,
                              const EncoderPair& encoders, EncodeCounters* counters) {
    FeatureVector fv;
    fv.hour_of_day = static_cast<double>(hour_of_day);
    fv.rssi_dbm = static_cast<double>(rssi_dbm);
    fv.device_code = encoders.device.encode(device_model);
    fv.ap_code = encoders.ap.encode(ap_model);
    fv.encrypted = encrypted;
    if (counters) {
        if (fv.device_code == CategoryEncoder::kUnseenCode) counters->unseen_device += 1;
        if (fv.ap_code == CategoryEncoder::kUnseenCode) counters->unseen_ap += 1;
    }
    return fv;
}

FeatureVector encode_attempt(const ConnectionAttempt& a, const EncoderPair& encoders,
                             EncodeCounters* counters) {
    return encode_features(a.hour_of_day, a.rssi_dbm, a.device_model, a.ap_model, a.encrypted,
                           encoders, counters);
}

}  // namespace wifilab
