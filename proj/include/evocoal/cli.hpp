// =============================================================================
// cli.hpp — Run orchestration: deterministic seeding, artifact emission,
// event-log persistence and replay.
//
// Every artifact is a pure function of the RunConfig: substreams derive
// from (seed, purpose, index), floats serialize at 17 significant digits,
// and replicate reductions merge in fixed chunk order.  Exit codes:
// 0 = all checks passed, 1 = a statistical decision failed, 2 = usage or
// I/O error.
// =============================================================================
#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "evocoal/event_log.hpp"
#include "evocoal/kingman.hpp"
#include "evocoal/lookdown.hpp"
#include "evocoal/moran.hpp"
#include "evocoal/stats.hpp"

namespace evocoal {

struct RunConfig {
    std::string command;  // kingman | moran | lookdown | verify | replay
    int n = 100;
    double t_end = 1.0;  // moran horizon / lookdown window length
    std::uint64_t reps = 1000;
    int f = 0;  // family overlay size, 0 = off, moran only
    std::uint64_t seed = 1;
    int i_max = 0;  // coalescent truncation (0 = default rule)
    int n_max = 0;  // lookdown level cap (0 = n)
    std::string out;       // output directory ("" = current)
    std::string log_path;  // event log to write (moran/lookdown) or read (replay)
    std::string format = "csv";  // csv | jsonl for result tables
    double ks_slack = 0.02;
    double alpha = 0.01;
    unsigned threads = 0;  // 0 = EVOCOAL_THREADS or hardware
};

// ---------------------------------------------------------------------------
// Result tables
// ---------------------------------------------------------------------------

struct NamedReport {
    std::string name;
    StatReport report;
};

inline void write_reports_csv(std::ostream& out, const std::vector<NamedReport>& reports) {
    out << "name,estimate,ci_low,ci_high,test_statistic,threshold,decision,seed,"
           "replicates,parameters\n";
    for (const auto& [name, r] : reports) {
        out << name << ',' << fmt_g17(r.estimate) << ',' << fmt_g17(r.ci_low) << ','
            << fmt_g17(r.ci_high) << ',' << fmt_g17(r.test_statistic) << ','
            << fmt_g17(r.threshold) << ',' << (r.decision ? "pass" : "fail") << ','
            << r.provenance.seed << ',' << r.provenance.replicates << ",\""
            << r.provenance.parameters << "\"\n";
    }
}

inline void write_reports_jsonl(std::ostream& out, const std::vector<NamedReport>& reports) {
    for (const auto& [name, r] : reports) {
        out << "{\"name\":\"" << name << "\",\"estimate\":" << fmt_g17(r.estimate)
            << ",\"ci_low\":" << fmt_g17(r.ci_low) << ",\"ci_high\":" << fmt_g17(r.ci_high)
            << ",\"test_statistic\":" << fmt_g17(r.test_statistic)
            << ",\"threshold\":" << fmt_g17(r.threshold)
            << ",\"decision\":" << (r.decision ? "true" : "false")
            << ",\"seed\":" << r.provenance.seed
            << ",\"replicates\":" << r.provenance.replicates << ",\"parameters\":\""
            << r.provenance.parameters << "\"}\n";
    }
}

// ---------------------------------------------------------------------------
// kingman: fixed-time sampling against the exact oracles
// ---------------------------------------------------------------------------

inline std::vector<NamedReport> run_kingman_reports(const RunConfig& cfg) {
    require(cfg.n >= 2, "kingman: population size must be >= 2");
    require(cfg.reps >= 100, "kingman: need at least 100 replicates");
    Moments4 lengths;
    std::vector<double> halves;
    halves.reserve(cfg.reps);
    const double comp = 2.0 * std::log(static_cast<double>(cfg.n));
    for (std::uint64_t rep = 0; rep < cfg.reps; ++rep) {
        RandomStream rng(cfg.seed, "kingman-length", rep);
        double len = tree_length(sample_intercoalescence_times(cfg.n, rng));
        lengths.add(len);
        halves.push_back(0.5 * (len - comp));
    }
    auto stamp = [&](StatReport r, const std::string& params) {
        r.provenance.seed = cfg.seed;
        r.provenance.parameters = params;
        r.provenance.replicates = cfg.reps;
        return r;
    };
    std::vector<NamedReport> reports;
    std::string params = "n=" + std::to_string(cfg.n) + ";reps=" + std::to_string(cfg.reps);
    StatReport mean;
    mean.estimate = lengths.mean();
    mean.test_statistic =
        std::abs(mean.estimate - expected_length_exact(cfg.n)) / lengths.se_mean();
    mean.threshold = 4.0;
    mean.decision = mean.test_statistic <= mean.threshold;
    mean.ci_low = mean.estimate - 4.0 * lengths.se_mean();
    mean.ci_high = mean.estimate + 4.0 * lengths.se_mean();
    reports.push_back({"mean_length_vs_exact", stamp(mean, params)});
    StatReport var;
    var.estimate = lengths.variance();
    var.test_statistic =
        std::abs(var.estimate - variance_length_exact(cfg.n)) / lengths.se_variance();
    var.threshold = 4.0;
    var.decision = var.test_statistic <= var.threshold;
    var.ci_low = var.estimate - 4.0 * lengths.se_variance();
    var.ci_high = var.estimate + 4.0 * lengths.se_variance();
    reports.push_back({"variance_length_vs_exact", stamp(var, params)});
    reports.push_back(
        {"gumbel_ks_half_compensated",
         stamp(ks_one_sample(halves, gumbel_cdf, cfg.ks_slack, cfg.alpha), params)});
    return reports;
}

// ---------------------------------------------------------------------------
// moran: one recorded path with artifacts
// ---------------------------------------------------------------------------

// time, value before and after each jump (compensated), MRCA flag.
inline void emit_path_csv(std::ostream& out, const LengthPath& path) {
    out << "time,value_pre_jump,value_post_jump,is_mrca_change\n";
    double value = path.base - path.compensation();
    double prev_time = path.t0;
    for (const PathJump& j : path.jumps) {
        double pre = value + path.n * (j.time - prev_time);
        double post = pre - j.size;
        out << fmt_g17(j.time) << ',' << fmt_g17(pre) << ',' << fmt_g17(post) << ','
            << (j.mrca_change ? 1 : 0) << '\n';
        value = post;
        prev_time = j.time;
    }
}

struct MoranRunResult {
    LengthPath path;
    double final_length = 0.0;
    std::uint64_t events = 0;
    std::uint64_t extinctions = 0;
};

// Writes the path CSV and, when requested, a replayable event log.
inline MoranRunResult run_moran_streams(const RunConfig& cfg, std::ostream& path_csv,
                                        std::ostream* log) {
    require(cfg.n >= 2, "moran: population size must be >= 2");
    require(cfg.t_end > 0.0, "moran: t_end must be positive");
    const int f = cfg.f > 0 ? cfg.f : 2;  // MRCA flags come from the f=2 cut
    RandomStream rng(cfg.seed, "moran-run");
    MoranState state = MoranState::equilibrium(cfg.n, rng);
    state.track_families(f, substream_seed(cfg.seed, "moran-families"));

    std::optional<EventLogWriter> writer;
    if (log) {
        LogMeta meta;
        meta.model = "moran";
        meta.seed = cfg.seed;
        meta.n = cfg.n;
        meta.f = f;
        meta.t_start = 0.0;
        meta.t_end = cfg.t_end;
        writer.emplace(*log, meta);
        writer->snapshot(0.0, state.length());
    }

    MoranRunResult res;
    res.path.n = cfg.n;
    res.path.t0 = 0.0;
    res.path.t1 = cfg.t_end;
    res.path.base = state.length();
    for (;;) {
        ResamplingEvent ev = state.next_event(rng);
        if (ev.time > cfg.t_end) break;
        std::size_t ext_before = state.family().extinction_log.size();
        ApplyResult r = state.apply_event(ev);
        res.path.jumps.push_back({ev.time, r.drop(), r.old_part, r.mrca_change});
        ++res.events;
        if (writer) {
            writer->resample(ev.time, ev.dier, ev.reproducer);
            writer->jump(ev.time, r.drop(), r.mrca_change);
            if (state.family().extinction_log.size() > ext_before) {
                writer->extinction(ev.time, 0);
                ++res.extinctions;
            }
        } else if (state.family().extinction_log.size() > ext_before) {
            ++res.extinctions;
        }
    }
    state.advance_to(cfg.t_end);
    res.final_length = state.length();
    if (writer) writer->snapshot(cfg.t_end, state.length());
    emit_path_csv(path_csv, res.path);
    return res;
}

// ---------------------------------------------------------------------------
// lookdown: sampled window with the level-n length path
// ---------------------------------------------------------------------------

struct LookdownRunResult {
    LengthPath path;
    std::uint64_t events = 0;
    double final_length = 0.0;
};

inline LookdownRunResult run_lookdown_streams(const RunConfig& cfg, std::ostream& path_csv,
                                              std::ostream* log) {
    require(cfg.n >= 2, "lookdown: need n >= 2");
    require(cfg.t_end > 0.0, "lookdown: window length must be positive");
    const int cap = cfg.n_max > 0 ? cfg.n_max : cfg.n;
    require(cap >= cfg.n, "lookdown: level cap below the queried levels");
    // events and the start genealogy come from separate substreams so a
    // replay can rebuild the genealogy while taking events from the log
    RandomStream ev_rng(cfg.seed, "lookdown-events");
    RandomStream init_rng(cfg.seed, "lookdown-init");
    LookdownWindow w;
    w.n_max = cap;
    w.t_start = 0.0;
    w.t_end = cfg.t_end;
    const double rate = choose2(cap);
    double t = 0.0;
    for (;;) {
        t += ev_rng.exponential(rate);
        if (t > cfg.t_end) break;
        auto [a, b] = ev_rng.ordered_pair_below(static_cast<std::uint32_t>(cap));
        w.events.push_back({t, static_cast<int>(std::min(a, b)) + 1,
                            static_cast<int>(std::max(a, b)) + 1});
    }
    w.init_genealogy = sample_topology(cap, init_rng);
    w.level_to_init_leaf.assign(static_cast<std::size_t>(cap) + 1, 0);
    for (int l = 1; l <= cap; ++l) w.level_to_init_leaf[static_cast<std::size_t>(l)] = l;
    for (std::size_t k = static_cast<std::size_t>(cap); k > 1; --k)
        std::swap(w.level_to_init_leaf[k], w.level_to_init_leaf[init_rng.uniform_below(k) + 1]);

    LookdownRunResult res;
    res.events = w.events.size();
    res.path = length_path_ld(w, cfg.n);
    res.final_length = res.path.value(cfg.t_end);
    if (log) {
        LogMeta meta;
        meta.model = "lookdown";
        meta.seed = cfg.seed;
        meta.n = cfg.n;
        meta.n_max = cap;
        meta.t_start = 0.0;
        meta.t_end = cfg.t_end;
        EventLogWriter writer(*log, meta);
        for (const auto& ev : w.events) writer.lookdown(ev.time, ev.i, ev.j);
        writer.snapshot(cfg.t_end, res.final_length);
    }
    emit_path_csv(path_csv, res.path);
    return res;
}

// ---------------------------------------------------------------------------
// replay
// ---------------------------------------------------------------------------

struct ReplaySummary {
    std::string model;
    std::uint64_t events = 0;
    std::uint64_t snapshots_checked = 0;
    double max_snapshot_deviation = 0.0;
    double final_length = 0.0;
    bool ok = false;
};

// Re-applies the logged events through the engines.  The log is the
// authority: its seed re-derives the start genealogy, its event records
// drive the dynamics, and every logged snapshot must be reproduced to
// 1e-9.
inline ReplaySummary replay(std::istream& in) {
    EventLog log = read_event_log(in);
    ReplaySummary sum;
    sum.model = log.meta.model;
    sum.ok = true;
    if (log.meta.model == "moran") {
        RandomStream rng(log.meta.seed, "moran-run");
        MoranState state = MoranState::equilibrium(log.meta.n, rng);
        for (const auto& rec : log.records) {
            switch (rec.kind) {
                case RecordKind::resample:
                    state.apply_event({rec.time, rec.a, rec.b});
                    ++sum.events;
                    break;
                case RecordKind::snapshot: {
                    state.advance_to(rec.time);
                    double dev = std::abs(state.length() - rec.x);
                    sum.max_snapshot_deviation = std::max(sum.max_snapshot_deviation, dev);
                    ++sum.snapshots_checked;
                    if (dev > 1e-9) sum.ok = false;
                    break;
                }
                default:
                    break;  // jump/extinction records are derived data
            }
        }
        state.advance_to(log.meta.t_end);
        sum.final_length = state.length();
    } else if (log.meta.model == "lookdown") {
        RandomStream init_rng(log.meta.seed, "lookdown-init");
        LookdownWindow w;
        w.n_max = log.meta.n_max;
        w.t_start = log.meta.t_start;
        w.t_end = log.meta.t_end;
        for (const auto& rec : log.records) {
            if (rec.kind == RecordKind::lookdown) {
                w.events.push_back({rec.time, rec.a, rec.b});
                ++sum.events;
            }
        }
        w.init_genealogy = sample_topology(log.meta.n_max, init_rng);
        w.level_to_init_leaf.assign(static_cast<std::size_t>(log.meta.n_max) + 1, 0);
        for (int l = 1; l <= log.meta.n_max; ++l)
            w.level_to_init_leaf[static_cast<std::size_t>(l)] = l;
        for (std::size_t k = static_cast<std::size_t>(log.meta.n_max); k > 1; --k)
            std::swap(w.level_to_init_leaf[k],
                      w.level_to_init_leaf[init_rng.uniform_below(k) + 1]);
        LengthPath path = length_path_ld(w, log.meta.n);
        sum.final_length = path.value(log.meta.t_end);
        for (const auto& rec : log.records) {
            if (rec.kind != RecordKind::snapshot) continue;
            double dev = std::abs(path.value(rec.time) - rec.x);
            sum.max_snapshot_deviation = std::max(sum.max_snapshot_deviation, dev);
            ++sum.snapshots_checked;
            if (dev > 1e-9) sum.ok = false;
        }
    } else {
        throw std::runtime_error("replay: unknown model '" + log.meta.model + "'");
    }
    return sum;
}

}  // namespace evocoal
