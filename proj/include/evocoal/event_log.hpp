// =============================================================================
// event_log.hpp — JSON-lines event logs: one kind-tagged record per line.
//
// The first record carries the schema version (v:1) plus everything needed
// to re-derive the run deterministically (model, sizes, seed).  Times and
// lengths are serialized as decimal with 17 significant digits, which
// round-trips binary64 exactly, so a replay sees bit-identical values.
// =============================================================================
#pragma once

#include <cstdint>
#include <cstdio>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "evocoal/numeric.hpp"

namespace evocoal {

inline std::string fmt_g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

struct LogMeta {
    int version = 1;
    std::string model;  // "moran" | "lookdown"
    std::uint64_t seed = 0;
    int n = 0;      // population size / queried levels
    int n_max = 0;  // lookdown level cap
    int f = 0;      // family overlay, 0 = off
    double t_start = 0.0;
    double t_end = 0.0;
};

enum class RecordKind { resample, lookdown, extinction, jump, snapshot };

struct EventLogRecord {
    RecordKind kind;
    double time = 0.0;
    int a = 0;       // dier / level i / family index
    int b = 0;       // reproducer / level j
    double x = 0.0;  // jump size / length value
    bool flag = false;  // jump: MRCA change
};

struct EventLog {
    LogMeta meta;
    std::vector<EventLogRecord> records;
};

struct LogParseError : std::runtime_error {
    int line;
    LogParseError(int line_number, const std::string& what)
        : std::runtime_error("event log line " + std::to_string(line_number) + ": " + what),
          line(line_number) {}
};

// ---------------------------------------------------------------------------
// Writing
// ---------------------------------------------------------------------------

class EventLogWriter {
public:
    explicit EventLogWriter(std::ostream& out, const LogMeta& meta) : out_(out) {
        out_ << "{\"v\":1,\"kind\":\"meta\",\"model\":\"" << meta.model
             << "\",\"seed\":" << meta.seed << ",\"n\":" << meta.n
             << ",\"n_max\":" << meta.n_max << ",\"f\":" << meta.f
             << ",\"t_start\":" << fmt_g17(meta.t_start)
             << ",\"t_end\":" << fmt_g17(meta.t_end) << "}\n";
    }

    void resample(double time, int dier, int reproducer) {
        out_ << "{\"kind\":\"resample\",\"time\":" << fmt_g17(time)
             << ",\"dier\":" << dier << ",\"reproducer\":" << reproducer << "}\n";
    }
    void lookdown(double time, int i, int j) {
        out_ << "{\"kind\":\"lookdown\",\"time\":" << fmt_g17(time) << ",\"i\":" << i
             << ",\"j\":" << j << "}\n";
    }
    void extinction(double time, int family) {
        out_ << "{\"kind\":\"extinction\",\"time\":" << fmt_g17(time)
             << ",\"family\":" << family << "}\n";
    }
    void jump(double time, double size, bool mrca_change) {
        out_ << "{\"kind\":\"jump\",\"time\":" << fmt_g17(time)
             << ",\"size\":" << fmt_g17(size) << ",\"mrca\":" << (mrca_change ? 1 : 0)
             << "}\n";
    }
    void snapshot(double time, double length) {
        out_ << "{\"kind\":\"snapshot\",\"time\":" << fmt_g17(time)
             << ",\"length\":" << fmt_g17(length) << "}\n";
    }

private:
    std::ostream& out_;
};

// ---------------------------------------------------------------------------
// Reading
// ---------------------------------------------------------------------------

inline EventLog read_event_log(std::istream& in) {
    EventLog log;
    std::string line;
    int line_no = 0;
    bool have_meta = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const std::exception& e) {
            throw LogParseError(line_no, e.what());
        }
        try {
            const std::string kind = j.at("kind").get<std::string>();
            if (kind == "meta") {
                if (j.at("v").get<int>() != 1)
                    throw std::runtime_error("unsupported schema version");
                log.meta.model = j.at("model").get<std::string>();
                log.meta.seed = j.at("seed").get<std::uint64_t>();
                log.meta.n = j.at("n").get<int>();
                log.meta.n_max = j.at("n_max").get<int>();
                log.meta.f = j.at("f").get<int>();
                log.meta.t_start = j.at("t_start").get<double>();
                log.meta.t_end = j.at("t_end").get<double>();
                have_meta = true;
                continue;
            }
            if (!have_meta) throw std::runtime_error("first record must be the meta record");
            EventLogRecord r{};
            r.time = j.at("time").get<double>();
            if (kind == "resample") {
                r.kind = RecordKind::resample;
                r.a = j.at("dier").get<int>();
                r.b = j.at("reproducer").get<int>();
            } else if (kind == "lookdown") {
                r.kind = RecordKind::lookdown;
                r.a = j.at("i").get<int>();
                r.b = j.at("j").get<int>();
            } else if (kind == "extinction") {
                r.kind = RecordKind::extinction;
                r.a = j.at("family").get<int>();
            } else if (kind == "jump") {
                r.kind = RecordKind::jump;
                r.x = j.at("size").get<double>();
                r.flag = j.at("mrca").get<int>() != 0;
            } else if (kind == "snapshot") {
                r.kind = RecordKind::snapshot;
                r.x = j.at("length").get<double>();
            } else {
                throw std::runtime_error("unknown record kind '" + kind + "'");
            }
            log.records.push_back(r);
        } catch (const LogParseError&) {
            throw;
        } catch (const std::exception& e) {
            throw LogParseError(line_no, e.what());
        }
    }
    if (!have_meta) throw LogParseError(line_no == 0 ? 1 : line_no, "missing meta record");
    return log;
}

}  // namespace evocoal
