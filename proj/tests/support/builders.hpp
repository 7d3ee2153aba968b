#pragma once

// Small fixture builders shared across test files.

#include <string>
#include <vector>

#include "wifilab/log_schema.hpp"

namespace builders {

inline wifilab::ConnectionAttempt success(std::string id, std::int64_t time_ms,
                                          std::string device = "DM-0", std::string ap = "APM-0") {
    wifilab::ConnectionAttempt a;
    a.attempt_id = std::move(id);
    a.hour_of_day = 12;
    a.rssi_dbm = -70;
    a.num_devices = 3;
    a.device_model = std::move(device);
    a.ap_model = std::move(ap);
    a.encrypted = true;
    a.outcome = wifilab::Outcome::Success;
    a.connection_time_ms = time_ms;
    a.user_id = "u-0";
    return a;
}

inline wifilab::ConnectionAttempt failure(std::string id, wifilab::Outcome o) {
    wifilab::ConnectionAttempt a;
    a.attempt_id = std::move(id);
    a.hour_of_day = 9;
    a.rssi_dbm = -80;
    a.num_devices = 1;
    a.device_model = "DM-0";
    a.ap_model = "APM-0";
    a.encrypted = true;
    a.outcome = o;
    a.user_id = "u-1";
    return a;
}

inline wifilab::ConnectionAttempt with_phases(wifilab::ConnectionAttempt a, std::int64_t scan,
                                              std::int64_t assoc, std::int64_t auth,
                                              std::int64_t dhcp) {
    a.phases = wifilab::PhaseTiming{scan, assoc, auth, dhcp};
    return a;
}

}  // namespace builders
