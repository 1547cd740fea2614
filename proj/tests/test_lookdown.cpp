#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "evocoal/lookdown.hpp"
#include "evocoal/stats.hpp"

using namespace evocoal;

namespace {

// Window with hand-placed events over a deterministic two-leaf start.
LookdownWindow manual_window(int n_max, double t_end,
                             std::vector<LookdownEvent> events) {
    LookdownWindow w;
    w.n_max = n_max;
    w.t_start = 0.0;
    w.t_end = t_end;
    w.events = std::move(events);
    RandomStream rng(1234, "manual-init");
    w.init_genealogy = sample_topology(n_max, rng);
    w.level_to_init_leaf.assign(static_cast<std::size_t>(n_max) + 1, 0);
    for (int l = 1; l <= n_max; ++l)
        w.level_to_init_leaf[static_cast<std::size_t>(l)] = l;
    return w;
}

// Tree length reconstructed purely from pairwise metric queries: sorted
// distinct merge ages a_1 < ... < a_{n-1}; between a_{m-1} and a_m there are
// n-m+1 lines.
double length_from_metric(const LookdownWindow& w, double t, int n) {
    std::set<double> ages;
    for (int i = 1; i <= n; ++i)
        for (int j = i + 1; j <= n; ++j)
            ages.insert(0.5 * metric_r_ld(w, t, i, j));
    std::vector<double> a(ages.begin(), ages.end());
    double len = 0.0, prev = 0.0;
    for (std::size_t m = 0; m < a.size(); ++m) {
        len += double(n - m) * (a[m] - prev);
        prev = a[m];
    }
    return len;
}

}  // namespace

TEST_CASE("window sampling: pair support, counts, uniformity") {
    RandomStream rng(200, "window");
    auto w2 = sample_window(2, 0.0, 2000.0, rng);
    std::vector<double> gaps;
    for (std::size_t e = 0; e < w2.events.size(); ++e) {
        REQUIRE(w2.events[e].i == 1);
        REQUIRE(w2.events[e].j == 2);
        gaps.push_back(e == 0 ? w2.events[0].time
                              : w2.events[e].time - w2.events[e - 1].time);
    }
    CHECK(ks_one_sample(gaps, [](double x) { return 1.0 - std::exp(-x); }, 0.0, 0.001)
              .decision);

    McEstimator counts;
    std::vector<double> pair_counts(45, 0.0);
    for (int rep = 0; rep < 3000; ++rep) {
        RandomStream r2(201, "wcount", rep);
        auto w = sample_window(10, 0.0, 1.0, r2);
        counts.add(double(w.events.size()));
        for (const auto& ev : w.events) {
            int idx = (ev.i - 1) * 10 + ev.j - 1;
            // flatten the 45 unordered pairs
            int flat = 0, c = 0;
            for (int a = 1; a <= 10; ++a)
                for (int b = a + 1; b <= 10; ++b, ++c)
                    if (a == ev.i && b == ev.j) flat = c;
            pair_counts[static_cast<std::size_t>(flat)] += 1.0;
            (void)idx;
        }
    }
    CHECK(counts.check_mean(45.0, 4.0).decision);
    double per = 0.0;
    for (double c : pair_counts) per += c;
    std::vector<double> expected(45, per / 45.0);
    CHECK(chi_square_gof(pair_counts, expected, 0.001).decision);
}

TEST_CASE("ancestor level: identity, push rule, immortal level one") {
    auto w = manual_window(5, 1.0, {{0.4, 1, 2}});
    CHECK(ancestor_level(w, 0.5, 1.0, 3) == 3);  // no events in (0.5, 1]
    CHECK(ancestor_level(w, 0.1, 1.0, 2) == 1);  // born at the event
    CHECK(ancestor_level(w, 0.1, 1.0, 3) == 2);  // pushed one up at 0.4
    CHECK(ancestor_level(w, 0.1, 1.0, 1) == 1);
    CHECK_THROWS_AS(ancestor_level(w, 0.1, 1.0, 6), lookdown_cap_exceeded);
    CHECK_THROWS(ancestor_level(w, -0.1, 1.0, 2));

    RandomStream rng(202, "immortal");
    auto big = sample_window(12, 0.0, 3.0, rng);
    for (double s : {0.0, 0.5, 1.7})
        CHECK(ancestor_level(big, s, 3.0, 1) == 1);
}

TEST_CASE("lookdown metric: definition, ultrametricity, coalescence order") {
    auto w = manual_window(4, 1.0, {{0.3, 1, 2}});
    CHECK(metric_r_ld(w, 1.0, 1, 2) == Catch::Approx(2.0 * (1.0 - 0.3)).epsilon(1e-12));
    CHECK_THROWS(metric_r_ld(w, 1.0, 2, 2));

    RandomStream rng(203, "ld-ultra");
    auto big = sample_window(15, 0.0, 1.5, rng);
    for (int i = 1; i <= 10; ++i)
        for (int j = i + 1; j <= 10; ++j) {
            double rij = metric_r_ld(big, 1.5, i, j);
            REQUIRE(rij == metric_r_ld(big, 1.5, j, i));
            for (int k = 1; k <= 6; ++k) {
                if (k == i || k == j) continue;
                REQUIRE(metric_r_ld(big, 1.5, i, k) <=
                        std::max(rij, metric_r_ld(big, 1.5, j, k)) + 1e-12);
            }
        }

    // exchangeability surrogate: conditioned on a strict order, levels
    // (1,2) coalesce before (1,3) half the time
    int closer = 0, strict = 0;
    for (int rep = 0; rep < 4000; ++rep) {
        RandomStream r2(204, "order", rep);
        auto win = sample_window(8, 0.0, 1.0, r2);
        double r12 = metric_r_ld(win, 1.0, 1, 2);
        double r13 = metric_r_ld(win, 1.0, 1, 3);
        if (r12 != r13) {
            ++strict;
            if (r12 < r13) ++closer;
        }
    }
    double p = double(closer) / double(strict);
    CHECK(std::abs(p - 0.5) < 4.0 * std::sqrt(0.25 / double(strict)));
}

TEST_CASE("length paths: two-level formula and metric cross-route") {
    // n = 2: length is twice the time since the last (1,2) lookdown
    auto w = manual_window(2, 1.0, {{0.2, 1, 2}, {0.6, 1, 2}});
    auto path = length_path_ld(w, 2);
    CHECK(path.value(1.0) == Catch::Approx(2.0 * (1.0 - 0.6)).margin(1e-12));
    // before the first event the init genealogy supplies the length
    double init_len = w.init_genealogy.length();
    CHECK(path.value(0.1) == Catch::Approx(init_len + 2.0 * 0.1).margin(1e-12));

    RandomStream rng(205, "cross");
    for (int rep = 0; rep < 25; ++rep) {
        auto win = sample_window(9, 0.0, 0.7, rng);
        auto p9 = length_path_ld(win, 9);
        double via_metric = length_from_metric(win, 0.7, 9);
        REQUIRE(std::abs(p9.value(0.7) - via_metric) < 1e-9 * std::max(1.0, via_metric));
    }
    CHECK_THROWS_AS(length_path_ld(manual_window(3, 1.0, {}), 4),
                    lookdown_cap_exceeded);
}

TEST_CASE("length paths: nested levels share the sub-threshold events") {
    RandomStream rng(206, "nested");
    auto w = sample_window(40, 0.0, 0.5, rng);
    auto p10 = length_path_ld(w, 10);
    auto p20 = length_path_ld(w, 20);
    std::set<double> jumps20;
    for (const auto& j : p20.jumps) jumps20.insert(j.time);
    std::size_t expected10 = 0;
    for (const auto& ev : w.events)
        if (ev.j <= 10) ++expected10;
    REQUIRE(p10.jumps.size() == expected10);
    for (const auto& j : p10.jumps) REQUIRE(jumps20.count(j.time) == 1);
}

TEST_CASE("fixed-time law matches the Kingman coalescent") {
    const int reps = 900;
    for (int n : {2, 10}) {
        std::vector<double> ld(reps), km(reps);
        std::vector<double> ld_depth(reps), km_depth(reps);
        for (int rep = 0; rep < reps; ++rep) {
            RandomStream ra(207, "ld-law", static_cast<std::uint64_t>(rep) * 2 + (n == 2));
            auto w = sample_window(n == 2 ? 4 : 25, 0.0, 1.0, ra);
            ld[static_cast<std::size_t>(rep)] = length_path_ld(w, n).value(1.0);
            double depth = 0.0;
            for (int j = 2; j <= n; ++j)
                depth = std::max(depth, 0.5 * metric_r_ld(w, 1.0, 1, j));
            ld_depth[static_cast<std::size_t>(rep)] = depth;
            RandomStream rb(208, "km-law", static_cast<std::uint64_t>(rep) * 2 + (n == 2));
            auto times = sample_intercoalescence_times(n, rb);
            km[static_cast<std::size_t>(rep)] = tree_length(times);
            double d = 0.0;
            for (int k = 2; k <= n; ++k) d += times.span(k);
            km_depth[static_cast<std::size_t>(rep)] = d;
        }
        CHECK(ks_two_sample(ld, km, 0.01).decision);
        CHECK(ks_two_sample(ld_depth, km_depth, 0.01).decision);
    }
}

TEST_CASE("push rates: sojourn at level k is Exp(C(k,2))") {
    RandomStream rng(209, "push");
    auto w = sample_window(12, 0.0, 80.0, rng);
    std::vector<McEstimator> sojourn(8);
    for (std::size_t e = 0; e < w.events.size(); ++e) {
        auto trace = trace_line_forward(w, e);
        // skip the final right-censored sojourn
        for (std::size_t s = 0; s + 1 < trace.size(); ++s) {
            auto [level, dt] = trace[s];
            if (level >= 3 && level <= 7)
                sojourn[static_cast<std::size_t>(level)].add(dt);
        }
    }
    for (int k = 3; k <= 7; ++k) {
        REQUIRE(sojourn[static_cast<std::size_t>(k)].count() > 200);
        CHECK(sojourn[static_cast<std::size_t>(k)].check_mean(1.0 / choose2(k), 4.5).decision);
    }
}

TEST_CASE("lines of ascent escape upward, faster for higher births") {
    RandomStream rng(210, "escape");
    auto w = sample_window(24, 0.0, 60.0, rng);
    McEstimator low_births, high_births;  // time to exceed level 12
    for (std::size_t e = 0; e < w.events.size(); ++e) {
        const auto& birth = w.events[e];
        if (birth.time > 30.0) break;
        auto trace = trace_line_forward(w, e);
        double when = 0.0;
        bool escaped = false;
        for (auto [level, dt] : trace) {
            when += dt;
            if (level >= 12) {
                escaped = true;
                break;
            }
        }
        if (!escaped) continue;
        (birth.j <= 6 ? low_births : high_births).add(when);
    }
    REQUIRE(low_births.count() > 100);
    REQUIRE(high_births.count() > 100);
    CHECK(low_births.mean() > high_births.mean());
    CHECK(low_births.mean() < 10.0);  // finite escape time at desk scale
}

TEST_CASE("nested distances: zero on identical sizes, bounded by sup norm") {
    RandomStream rng(211, "nested-d");
    auto w = sample_window(30, 0.0, 1.0, rng);
    auto same = nested_path_distances(w, {12, 12}, 1.0 / 256);
    REQUIRE(same.size() == 1);
    CHECK(same[0] == 0.0);

    auto d = nested_path_distances(w, {6, 12, 24}, 1.0 / 256);
    REQUIRE(d.size() == 2);
    auto p6 = length_path_ld(w, 6);
    auto p12 = length_path_ld(w, 12);
    double sup = 0.0;
    for (int g = 0; g <= 256; ++g) {
        double t = g / 256.0;
        sup = std::max(sup, std::abs(p6.compensated(t) - p12.compensated(t)));
    }
    CHECK(d[0] <= sup + 1e-12);

    std::vector<LookdownWindow> windows;
    for (int rep = 0; rep < 12; ++rep) {
        RandomStream r2(212, "report", rep);
        windows.push_back(sample_window(48, 0.0, 1.0, r2));
    }
    auto report = nested_convergence_report(windows, {6, 12, 24, 48}, 1.0 / 256);
    CHECK(report.decision);  // medians shrink along the doubling sizes
    CHECK(report.provenance.replicates == 12);
}
