#include "wifilab/log_schema.hpp"

#include <array>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace wifilab {

using nlohmann::json;

namespace {

constexpr std::array<const char*, kOutcomeCount> kOutcomeNames = {
    "Success",    "Timeout",    "DhcpFailure",     "WrongPassword",
    "SwitchedToAnotherWifi",    "ForgotWifi",      "SwitchedOffWifi",
    "Unknown",
};

constexpr const char* kBand24 = "2.4GHz";
constexpr const char* kBand5 = "5GHz";

}  // namespace

const char* to_string(Outcome o) {
    return kOutcomeNames[static_cast<std::size_t>(o)];
}

std::optional<Outcome> outcome_from_string(std::string_view s) {
    for (int i = 0; i < kOutcomeCount; ++i) {
        if (s == kOutcomeNames[static_cast<std::size_t>(i)]) return static_cast<Outcome>(i);
    }
    return std::nullopt;
}

const char* to_string(Band b) {
    return b == Band::Band2_4GHz ? kBand24 : kBand5;
}

std::optional<Band> band_from_string(std::string_view s) {
    if (s == kBand24) return Band::Band2_4GHz;
    if (s == kBand5) return Band::Band5GHz;
    return std::nullopt;
}

std::optional<LogFormat> log_format_from_string(std::string_view s) {
    if (s == "jsonl") return LogFormat::Jsonl;
    if (s == "csv") return LogFormat::Csv;
    return std::nullopt;
}

std::optional<std::string> validate(const ConnectionAttempt& a) {
    if (a.hour_of_day < 0 || a.hour_of_day > 23) return "hour_of_day out of [0,23]";
    if (a.rssi_dbm > kRssiCeilingDbm) return "rssi_dbm above ceiling";
    if (a.num_devices < 0) return "num_devices negative";
    if (a.outcome == Outcome::Success) {
        if (!a.connection_time_ms) return "Success without connection_time_ms";
        if (*a.connection_time_ms < 0) return "connection_time_ms negative";
        if (*a.connection_time_ms > kAttemptTimeoutMs) return "connection_time_ms above timeout";
    } else if (a.connection_time_ms) {
        return "connection_time_ms present on non-Success outcome";
    }
    if (a.phases) {
        const PhaseTiming& p = *a.phases;
        if (p.scan_ms < 0 || p.assoc_ms < 0 || p.auth_ms < 0 || p.dhcp_ms < 0) {
            return "negative phase duration";
        }
        if (a.outcome == Outcome::Success && p.total() != *a.connection_time_ms) {
            return "phase durations do not sum to connection_time_ms";
        }
    }
    return std::nullopt;
}

void validate_or_throw(const ConnectionAttempt& a) {
    if (auto err = validate(a)) {
        throw std::invalid_argument("invalid attempt '" + a.attempt_id + "': " + *err);
    }
}

std::size_t IngestResult::rejected_count() const {
    std::size_t n = 0;
    for (const auto& d : diagnostics) n += d.rejected ? 1 : 0;
    return n;
}

std::size_t IngestResult::warning_count() const {
    return diagnostics.size() - rejected_count();
}

namespace {

// Shared per-row fixups: clamp saturated RSSI, then run full validation.
// Returns false (with reason) when the row must be rejected.
bool repair_and_validate(ConnectionAttempt& a, std::size_t line, IngestResult& out,
                         std::string& reject_reason) {
    if (a.rssi_dbm > kRssiCeilingDbm) {
        out.diagnostics.push_back(
            {line, false,
             "rssi_dbm " + std::to_string(a.rssi_dbm) + " clamped to " +
                 std::to_string(kRssiCeilingDbm)});
        a.rssi_dbm = kRssiCeilingDbm;
    }
    if (auto err = validate(a)) {
        reject_reason = *err;
        return false;
    }
    return true;
}

std::optional<ConnectionAttempt> parse_json_row(const json& j, std::size_t line,
                                                IngestResult& out, std::string& reason) {
    ConnectionAttempt a;
    try {
        a.attempt_id = j.at("attempt_id").get<std::string>();
        a.hour_of_day = j.at("hour_of_day").get<int>();
        a.rssi_dbm = j.at("rssi_dbm").get<int>();
        a.num_devices = j.at("num_devices").get<int>();
        a.device_model = j.at("device_model").get<std::string>();
        a.ap_model = j.at("ap_model").get<std::string>();
        a.encrypted = j.at("encrypted").get<bool>();
        a.user_id = j.at("user_id").get<std::string>();
        if (j.contains("is_public")) a.is_public = j.at("is_public").get<bool>();
        if (j.contains("band")) {
            auto b = band_from_string(j.at("band").get<std::string>());
            if (!b) {
                reason = "unrecognized band value";
                return std::nullopt;
            }
            a.band = *b;
        }
        const auto outcome_str = j.at("outcome").get<std::string>();
        if (auto o = outcome_from_string(outcome_str)) {
            a.outcome = *o;
        } else {
            a.outcome = Outcome::Unknown;
            out.diagnostics.push_back(
                {line, false, "unknown outcome '" + outcome_str + "' mapped to Unknown"});
        }
        if (j.contains("connection_time_ms")) {
            a.connection_time_ms = j.at("connection_time_ms").get<std::int64_t>();
        }
        if (j.contains("phases")) {
            const json& p = j.at("phases");
            a.phases = PhaseTiming{p.at("scan_ms").get<std::int64_t>(),
                                   p.at("assoc_ms").get<std::int64_t>(),
                                   p.at("auth_ms").get<std::int64_t>(),
                                   p.at("dhcp_ms").get<std::int64_t>()};
        }
    } catch (const json::exception& e) {
        reason = e.what();
        return std::nullopt;
    }
    return a;
}

// Minimal CSV tokenizer with RFC-style quoting.
std::optional<std::vector<std::string>> split_csv(const std::string& row) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < row.size(); ++i) {
        const char c = row[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < row.size() && row[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (quoted) return std::nullopt;  // unterminated quote
    fields.push_back(std::move(cur));
    return fields;
}

std::string csv_escape(const std::string& s) {
    bool need = false;
    for (char c : s) {
        if (c == ',' || c == '"' || c == '\n' || c == '\r') {
            need = true;
            break;
        }
    }
    if (!need) return s;
    std::string out;
    out.reserve(s.size() + 2);
    out.push_back('"');
    for (char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

constexpr int kCsvColumns = 16;

bool parse_int(const std::string& s, std::int64_t& v) {
    if (s.empty()) return false;
    std::size_t pos = 0;
    try {
        v = std::stoll(s, &pos);
    } catch (...) {
        return false;
    }
    return pos == s.size();
}

std::optional<ConnectionAttempt> parse_csv_row(const std::vector<std::string>& f,
                                               std::size_t line, IngestResult& out,
                                               std::string& reason) {
    if (f.size() != kCsvColumns) {
        reason = "expected " + std::to_string(kCsvColumns) + " columns, got " +
                 std::to_string(f.size());
        return std::nullopt;
    }
    ConnectionAttempt a;
    std::int64_t v = 0;
    a.attempt_id = f[0];
    if (!parse_int(f[1], v)) { reason = "bad hour_of_day"; return std::nullopt; }
    a.hour_of_day = static_cast<int>(v);
    if (!parse_int(f[2], v)) { reason = "bad rssi_dbm"; return std::nullopt; }
    a.rssi_dbm = static_cast<int>(v);
    if (!parse_int(f[3], v)) { reason = "bad num_devices"; return std::nullopt; }
    a.num_devices = static_cast<int>(v);
    a.device_model = f[4];
    a.ap_model = f[5];
    if (f[6] == "true") a.encrypted = true;
    else if (f[6] == "false") a.encrypted = false;
    else { reason = "bad encrypted flag"; return std::nullopt; }
    if (!f[7].empty()) {
        if (f[7] == "true") a.is_public = true;
        else if (f[7] == "false") a.is_public = false;
        else { reason = "bad is_public flag"; return std::nullopt; }
    }
    if (!f[8].empty()) {
        auto b = band_from_string(f[8]);
        if (!b) { reason = "unrecognized band value"; return std::nullopt; }
        a.band = *b;
    }
    if (auto o = outcome_from_string(f[9])) {
        a.outcome = *o;
    } else {
        a.outcome = Outcome::Unknown;
        out.diagnostics.push_back({line, false, "unknown outcome '" + f[9] + "' mapped to Unknown"});
    }
    if (!f[10].empty()) {
        if (!parse_int(f[10], v)) { reason = "bad connection_time_ms"; return std::nullopt; }
        a.connection_time_ms = v;
    }
    const bool any_phase = !f[11].empty() || !f[12].empty() || !f[13].empty() || !f[14].empty();
    const bool all_phase = !f[11].empty() && !f[12].empty() && !f[13].empty() && !f[14].empty();
    if (any_phase && !all_phase) {
        reason = "partial phase columns";
        return std::nullopt;
    }
    if (all_phase) {
        PhaseTiming p;
        if (!parse_int(f[11], p.scan_ms) || !parse_int(f[12], p.assoc_ms) ||
            !parse_int(f[13], p.auth_ms) || !parse_int(f[14], p.dhcp_ms)) {
            reason = "bad phase duration";
            return std::nullopt;
        }
        a.phases = p;
    }
    a.user_id = f[15];
    return a;
}

}  // namespace

std::string csv_header() {
    return "attempt_id,hour_of_day,rssi_dbm,num_devices,device_model,ap_model,encrypted,"
           "is_public,band,outcome,connection_time_ms,scan_ms,assoc_ms,auth_ms,dhcp_ms,user_id";
}

IngestResult ingest(std::istream& in, LogFormat format) {
    if (!in) throw std::runtime_error("unreadable input stream");
    IngestResult out;
    std::string row;
    std::size_t line = 0;

    if (format == LogFormat::Csv) {
        if (!std::getline(in, row)) {
            if (in.bad()) throw std::runtime_error("unreadable input stream");
            return out;  // empty stream, empty corpus
        }
        ++line;
        if (!row.empty() && row.back() == '\r') row.pop_back();
        if (row != csv_header()) {
            throw std::runtime_error("CSV header mismatch; expected: " + csv_header());
        }
    }

    while (std::getline(in, row)) {
        ++line;
        if (!row.empty() && row.back() == '\r') row.pop_back();
        if (row.empty()) continue;

        std::string reason;
        std::optional<ConnectionAttempt> parsed;
        if (format == LogFormat::Jsonl) {
            json j = json::parse(row, nullptr, /*allow_exceptions=*/false);
            if (j.is_discarded()) {
                out.diagnostics.push_back({line, true, "malformed JSON"});
                continue;
            }
            parsed = parse_json_row(j, line, out, reason);
        } else {
            auto fields = split_csv(row);
            if (!fields) {
                out.diagnostics.push_back({line, true, "unterminated quote"});
                continue;
            }
            parsed = parse_csv_row(*fields, line, out, reason);
        }
        if (!parsed) {
            out.diagnostics.push_back({line, true, reason});
            continue;
        }
        if (!repair_and_validate(*parsed, line, out, reason)) {
            out.diagnostics.push_back({line, true, reason});
            continue;
        }
        out.attempts.push_back(std::move(*parsed));
    }
    if (in.bad()) throw std::runtime_error("unreadable input stream");
    return out;
}

IngestResult ingest_file(const std::string& path, LogFormat format) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    return ingest(in, format);
}

namespace {

json attempt_to_json(const ConnectionAttempt& a) {
    json j;
    j["attempt_id"] = a.attempt_id;
    j["hour_of_day"] = a.hour_of_day;
    j["rssi_dbm"] = a.rssi_dbm;
    j["num_devices"] = a.num_devices;
    j["device_model"] = a.device_model;
    j["ap_model"] = a.ap_model;
    j["encrypted"] = a.encrypted;
    if (a.is_public) j["is_public"] = *a.is_public;
    if (a.band) j["band"] = to_string(*a.band);
    j["outcome"] = to_string(a.outcome);
    if (a.connection_time_ms) j["connection_time_ms"] = *a.connection_time_ms;
    if (a.phases) {
        j["phases"] = {{"scan_ms", a.phases->scan_ms},
                       {"assoc_ms", a.phases->assoc_ms},
                       {"auth_ms", a.phases->auth_ms},
                       {"dhcp_ms", a.phases->dhcp_ms}};
    }
    j["user_id"] = a.user_id;
    return j;
}

void attempt_to_csv(const ConnectionAttempt& a, std::ostream& out) {
    out << csv_escape(a.attempt_id) << ',' << a.hour_of_day << ',' << a.rssi_dbm << ','
        << a.num_devices << ',' << csv_escape(a.device_model) << ',' << csv_escape(a.ap_model)
        << ',' << (a.encrypted ? "true" : "false") << ',';
    if (a.is_public) out << (*a.is_public ? "true" : "false");
    out << ',';
    if (a.band) out << to_string(*a.band);
    out << ',' << to_string(a.outcome) << ',';
    if (a.connection_time_ms) out << *a.connection_time_ms;
    out << ',';
    if (a.phases) {
        out << a.phases->scan_ms << ',' << a.phases->assoc_ms << ',' << a.phases->auth_ms << ','
            << a.phases->dhcp_ms;
    } else {
        out << ",,,";
    }
    out << ',' << csv_escape(a.user_id) << '\n';
}

}  // namespace

void emit(const std::vector<ConnectionAttempt>& attempts, std::ostream& out, LogFormat format) {
    if (format == LogFormat::Csv) out << csv_header() << '\n';
    for (const auto& a : attempts) {
        validate_or_throw(a);
        if (format == LogFormat::Jsonl) {
            out << attempt_to_json(a).dump() << '\n';
        } else {
            attempt_to_csv(a, out);
        }
    }
    if (!out) throw std::runtime_error("write failure while emitting corpus");
}

void emit_file(const std::vector<ConnectionAttempt>& attempts, const std::string& path,
               LogFormat format) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    emit(attempts, out, format);
}

}  // namespace wifilab
