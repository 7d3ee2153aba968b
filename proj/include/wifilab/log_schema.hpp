#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace wifilab {

// How a connection set-up process ended. The "willing" subset (Success,
// Timeout, DhcpFailure) covers attempts where the user genuinely tried to
// connect; the rest are user actions that abort the process.
enum class Outcome {
    Success,
    Timeout,
    DhcpFailure,
    WrongPassword,
    SwitchedToAnotherWifi,
    ForgotWifi,
    SwitchedOffWifi,
    Unknown,
};

inline constexpr int kOutcomeCount = 8;

inline bool is_willing(Outcome o) {
    return o == Outcome::Success || o == Outcome::Timeout || o == Outcome::DhcpFailure;
}

enum class Band { Band2_4GHz, Band5GHz };

// Device-side RSSI readings saturate; anything stronger is recorded as the
// ceiling value.
inline constexpr int kRssiCeilingDbm = -55;

// An attempt that has not obtained an IP address by this deadline is a
// failure, so no stored success time can exceed it.
inline constexpr std::int64_t kAttemptTimeoutMs = 30000;

const char* to_string(Outcome o);
std::optional<Outcome> outcome_from_string(std::string_view s);
const char* to_string(Band b);
std::optional<Band> band_from_string(std::string_view s);

// Per-phase dwell times of one attempt, in milliseconds. auth_ms is zero for
// open APs. For successful attempts the four components partition the total
// connection time.
struct PhaseTiming {
    std::int64_t scan_ms = 0;
    std::int64_t assoc_ms = 0;
    std::int64_t auth_ms = 0;
    std::int64_t dhcp_ms = 0;

    std::int64_t total() const { return scan_ms + assoc_ms + auth_ms + dhcp_ms; }
    bool operator==(const PhaseTiming&) const = default;
};

// One connection-log row: the context in which the attempt happened plus its
// result. connection_time_ms is present exactly for successful attempts.
struct ConnectionAttempt {
    std::string attempt_id;
    int hour_of_day = 0;
    int rssi_dbm = kRssiCeilingDbm;
    int num_devices = 0;
    std::string device_model;
    std::string ap_model;
    bool encrypted = false;
    std::optional<bool> is_public;
    std::optional<Band> band;
    Outcome outcome = Outcome::Unknown;
    std::optional<std::int64_t> connection_time_ms;
    std::optional<PhaseTiming> phases;
    std::string user_id;

    bool operator==(const ConnectionAttempt&) const = default;
};

// Returns a description of the first violated invariant, or nullopt if the
// attempt is well-formed. Every producer of ConnectionAttempt values in this
// codebase validates at construction, not just at ingest.
std::optional<std::string> validate(const ConnectionAttempt& a);
void validate_or_throw(const ConnectionAttempt& a);

enum class LogFormat { Jsonl, Csv };

std::optional<LogFormat> log_format_from_string(std::string_view s);

struct RowDiagnostic {
    std::size_t line = 0;  // 1-based; for CSV the header is line 1
    bool rejected = false;
    std::string reason;
};

struct IngestResult {
    std::vector<ConnectionAttempt> attempts;
    std::vector<RowDiagnostic> diagnostics;

    std::size_t rejected_count() const;
    std::size_t warning_count() const;
};

// Parses a corpus from a line-oriented stream. Repairable issues (RSSI above
// the ceiling, unknown outcome labels) are fixed up and reported as warnings;
// rows violating non-repairable invariants are rejected with line and reason.
// An unreadable stream throws.
IngestResult ingest(std::istream& in, LogFormat format);
IngestResult ingest_file(const std::string& path, LogFormat format);

void emit(const std::vector<ConnectionAttempt>& attempts, std::ostream& out, LogFormat format);
void emit_file(const std::vector<ConnectionAttempt>& attempts, const std::string& path,
               LogFormat format);

// Fixed CSV column order; this exact string is the required header row.
std::string csv_header();

}  // namespace wifilab
