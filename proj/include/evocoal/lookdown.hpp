// =============================================================================
// lookdown.hpp — Donnelly-Kurtz lookdown construction on a finite window.
//
// Events (t, i, j), 1 <= i < j <= n_max: the individual at level j looks
// down to level i; levels >= j are pushed one up.  Backward traces are
// level-non-increasing, so every query at a level <= n_max is exact — the
// cap only bounds which levels can be queried, never the fidelity of a
// trace.  The genealogy below the window start comes from an initial
// Kingman n_max-coalescent with a uniformly random leaf-to-level
// assignment; by exchangeability of the Kingman tree this reproduces the
// correct law of every level-symmetric functional (tree length, depth,
// event statistics), which is all the verification battery consumes.
// =============================================================================
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "evocoal/coalescent_tree.hpp"
#include "evocoal/moran.hpp"
#include "evocoal/numeric.hpp"
#include "evocoal/random.hpp"

namespace evocoal {

struct LookdownEvent {
    double time = 0.0;
    int i = 0;
    int j = 0;  // 1 <= i < j <= n_max
};

struct LookdownWindow {
    int n_max = 0;
    double t_start = 0.0;
    double t_end = 0.0;
    std::vector<LookdownEvent> events;  // ascending time
    CoalescentTree init_genealogy;      // ages relative to t_start
    std::vector<int> level_to_init_leaf;  // level (1..n_max) -> init leaf id
};

inline LookdownWindow sample_window(int n_max, double t_start, double t_end,
                                    RandomStream& rng) {
    require(n_max >= 2, "sample_window: need n_max >= 2");
    require(t_end > t_start, "sample_window: empty window");
    LookdownWindow w;
    w.n_max = n_max;
    w.t_start = t_start;
    w.t_end = t_end;
    const double rate = choose2(n_max);
    double t = t_start;
    for (;;) {
        t += rng.exponential(rate);
        if (t > t_end) break;
        auto [a, b] = rng.ordered_pair_below(static_cast<std::uint32_t>(n_max));
        LookdownEvent ev;
        ev.time = t;
        ev.i = static_cast<int>(std::min(a, b)) + 1;
        ev.j = static_cast<int>(std::max(a, b)) + 1;
        w.events.push_back(ev);
    }
    w.init_genealogy = sample_topology(n_max, rng);
    w.level_to_init_leaf.assign(static_cast<std::size_t>(n_max) + 1, 0);
    for (int l = 1; l <= n_max; ++l) w.level_to_init_leaf[static_cast<std::size_t>(l)] = l;
    for (std::size_t k = static_cast<std::size_t>(n_max); k > 1; --k)
        std::swap(w.level_to_init_leaf[k], w.level_to_init_leaf[rng.uniform_below(k) + 1]);
    return w;
}

struct lookdown_cap_exceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// First event index with time > s.
inline std::size_t first_event_after(const LookdownWindow& w, double s) {
    auto it = std::upper_bound(w.events.begin(), w.events.end(), s,
                               [](double v, const LookdownEvent& e) { return v < e.time; });
    return static_cast<std::size_t>(it - w.events.begin());
}

// A_s(t, j): level at time s of the ancestor of the individual at level j
// at time t.  Backward through an event (i', j'): a line at level k maps to
// i' if k == j', to k-1 if k > j', else stays.
inline int ancestor_level(const LookdownWindow& w, double s, double t, int j) {
    require(w.t_start <= s && s <= t && t <= w.t_end,
            "ancestor_level: query outside the window");
    if (j < 1 || j > w.n_max)
        throw lookdown_cap_exceeded("ancestor_level: level beyond the cap");
    std::size_t lo = first_event_after(w, s);
    std::size_t hi = first_event_after(w, t);  // events in (s, t] are [lo, hi)
    int k = j;
    for (std::size_t e = hi; e > lo;) {
        --e;
        const LookdownEvent& ev = w.events[e];
        if (k == ev.j)
            k = ev.i;
        else if (k > ev.j)
            --k;
    }
    return k;
}

// R^ld_t(i, j) = 2 inf{t - s : A_s(t,i) = A_s(t,j)}, extended below the
// window start through the initial genealogy.
inline double metric_r_ld(const LookdownWindow& w, double t, int i, int j) {
    require(i != j, "metric_r_ld: levels must differ");
    require(w.t_start <= t && t <= w.t_end, "metric_r_ld: time outside the window");
    if (i < 1 || j < 1 || i > w.n_max || j > w.n_max)
        throw lookdown_cap_exceeded("metric_r_ld: level beyond the cap");
    std::size_t hi = first_event_after(w, t);
    int ki = i, kj = j;
    for (std::size_t e = hi; e > 0;) {
        --e;
        const LookdownEvent& ev = w.events[e];
        if (ki == ev.j)
            ki = ev.i;
        else if (ki > ev.j)
            --ki;
        if (kj == ev.j)
            kj = ev.i;
        else if (kj > ev.j)
            --kj;
        if (ki == kj) return 2.0 * (t - ev.time);
    }
    int la = w.level_to_init_leaf[static_cast<std::size_t>(ki)];
    int lb = w.level_to_init_leaf[static_cast<std::size_t>(kj)];
    return 2.0 * (t - w.t_start) + metric_r(w.init_genealogy, la, lb);
}

// ---------------------------------------------------------------------------
// Length paths of the first n levels
// ---------------------------------------------------------------------------

// The restriction of the lookdown to levels 1..n is itself a Moran-type
// particle system: an event (i, j) with j <= n kills the level-n line,
// reproduces the level-i line and inserts the newborn at level j.
// Events with j > n cannot touch any backward trace below n and are
// skipped.  The per-level occupant slots are tracked so the shared arena
// machinery (and its differential length test) carries over unchanged.
inline LengthPath length_path_ld(const LookdownWindow& w, int n) {
    require(n >= 2, "length_path_ld: need n >= 2");
    if (n > w.n_max) throw lookdown_cap_exceeded("length_path_ld: n beyond the cap");

    std::vector<int> leaves(static_cast<std::size_t>(n));
    for (int l = 1; l <= n; ++l)
        leaves[static_cast<std::size_t>(l - 1)] = w.level_to_init_leaf[static_cast<std::size_t>(l)];
    MoranState state(restrict_to_leaves(w.init_genealogy, leaves), w.t_start);

    std::vector<int> slot_of_level(static_cast<std::size_t>(n) + 1);
    for (int l = 1; l <= n; ++l) slot_of_level[static_cast<std::size_t>(l)] = l;

    LengthPath path;
    path.n = n;
    path.t0 = w.t_start;
    path.t1 = w.t_end;
    path.base = state.length();
    for (const LookdownEvent& ev : w.events) {
        if (ev.j > n) continue;
        ResamplingEvent rev;
        rev.time = ev.time;
        rev.dier = slot_of_level[static_cast<std::size_t>(n)];
        rev.reproducer = slot_of_level[static_cast<std::size_t>(ev.i)];
        ApplyResult res = state.apply_event(rev);
        path.jumps.push_back({ev.time, res.drop(), res.old_part, res.mrca_change});
        for (int l = n; l > ev.j; --l)
            slot_of_level[static_cast<std::size_t>(l)] = slot_of_level[static_cast<std::size_t>(l - 1)];
        slot_of_level[static_cast<std::size_t>(ev.j)] = rev.dier;
    }
    state.advance_to(w.t_end);
    return path;
}

// Approximate Skorokhod distances between the compensated length paths of
// consecutive level counts, all read off one window (shared randomness).
inline std::vector<double> nested_path_distances(const LookdownWindow& w,
                                                 const std::vector<int>& n_list,
                                                 double grid_resolution);

// Strong-convergence diagnostic: per replicate window, the consecutive-size
// path distances on shared randomness; reported as the median per size pair.
// decision: medians strictly decreasing along the size list (no rate is
// claimed, only the trend).  estimate carries the last median,
// test_statistic the worst adjacent median ratio; pass requires it
// strictly below the threshold 1.
inline StatReport nested_convergence_report(const std::vector<LookdownWindow>& windows,
                                            const std::vector<int>& n_list,
                                            double grid_resolution) {
    require(!windows.empty(), "nested_convergence_report: no windows");
    const std::size_t pairs = n_list.size() - 1;
    std::vector<std::vector<double>> dists(pairs);
    for (const auto& w : windows) {
        auto d = nested_path_distances(w, n_list, grid_resolution);
        for (std::size_t k = 0; k < pairs; ++k) dists[k].push_back(d[k]);
    }
    std::vector<double> medians(pairs);
    for (std::size_t k = 0; k < pairs; ++k) {
        std::sort(dists[k].begin(), dists[k].end());
        medians[k] = dists[k][dists[k].size() / 2];
    }
    StatReport r;
    r.estimate = medians.back();
    r.ci_low = r.ci_high = r.estimate;
    r.test_statistic = 0.0;
    for (std::size_t k = 0; k + 1 < pairs; ++k)
        r.test_statistic = std::max(r.test_statistic, medians[k + 1] / medians[k]);
    r.threshold = 1.0;
    r.decision = r.test_statistic < r.threshold;
    r.provenance.replicates = windows.size();
    std::string desc;
    for (double m : medians) desc += (desc.empty() ? "" : " > ") + std::to_string(m);
    r.provenance.parameters = "medians " + desc;
    return r;
}

inline std::vector<double> nested_path_distances(const LookdownWindow& w,
                                                 const std::vector<int>& n_list,
                                                 double grid_resolution) {
    require(n_list.size() >= 2, "nested_path_distances: need at least two sizes");
    std::vector<LengthPath> paths;
    paths.reserve(n_list.size());
    for (int n : n_list) paths.push_back(length_path_ld(w, n));
    std::vector<double> out;
    for (std::size_t k = 0; k + 1 < paths.size(); ++k) {
        const LengthPath& a = paths[k];
        const LengthPath& b = paths[k + 1];
        out.push_back(skorokhod_distance_approx(
            [&a](double t) { return a.compensated(t); },
            [&b](double t) { return b.compensated(t); }, w.t_start, w.t_end,
            grid_resolution));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Forward line-of-ascent tracing (diagnostics)
// ---------------------------------------------------------------------------

// Follows the line born at events[birth_index] forward: it sits at its
// level until an event with j <= level pushes it up (or a lower birth
// shifts it).  Returns (level, sojourn) pairs until the window ends or the
// level would exceed n_max.
inline std::vector<std::pair<int, double>> trace_line_forward(const LookdownWindow& w,
                                                              std::size_t birth_index) {
    require(birth_index < w.events.size(), "trace_line_forward: no such event");
    std::vector<std::pair<int, double>> sojourns;
    int level = w.events[birth_index].j;
    double since = w.events[birth_index].time;
    for (std::size_t e = birth_index + 1; e < w.events.size(); ++e) {
        const LookdownEvent& ev = w.events[e];
        if (ev.j <= level) {
            sojourns.emplace_back(level, ev.time - since);
            since = ev.time;
            if (++level > w.n_max) return sojourns;
        }
    }
    sojourns.emplace_back(level, w.t_end - since);
    return sojourns;
}

}  // namespace evocoal
