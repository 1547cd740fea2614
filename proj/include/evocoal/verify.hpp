// =============================================================================
// verify.hpp — The acceptance battery.
//
// Thirteen criteria, each with its tolerances pinned here.  Every criterion
// prints one pass/fail line; the runner exits nonzero if any fails.  All
// randomness derives from (seed, purpose, replicate) substreams, so the
// whole battery is a pure function of the seed.
// =============================================================================
#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "evocoal/cli.hpp"
#include "evocoal/kingman.hpp"
#include "evocoal/lookdown.hpp"
#include "evocoal/moran.hpp"
#include "evocoal/parallel.hpp"
#include "evocoal/stats.hpp"

namespace evocoal {

struct CriterionResult {
    int index = 0;
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

namespace verify_detail {

inline std::string fmt(double x, int prec = 4) {
    std::ostringstream os;
    os << std::setprecision(prec) << x;
    return os.str();
}

}  // namespace verify_detail

class VerificationRun {
public:
    VerificationRun(std::uint64_t seed, std::string out_dir, unsigned threads)
        : seed_(seed), out_dir_(std::move(out_dir)), threads_(threads) {
        if (threads_ == 0) threads_ = default_thread_count();
        if (out_dir_.empty()) out_dir_ = ".";
        std::filesystem::create_directories(out_dir_);
    }

    // Runs the battery; `only` = 0 runs everything, k runs criterion k alone.
    std::vector<CriterionResult> run_all(std::ostream& progress, int only = 0) {
        std::vector<CriterionResult> results;
        using Fn = std::function<std::pair<bool, std::string>()>;
        const std::vector<std::pair<std::string, Fn>> criteria = {
            {"exact-moments", [this] { return c1_exact_moments(); }},
            {"gumbel-marginal", [this] { return c2_gumbel(); }},
            {"coupling-gap", [this] { return c3_coupling_gap(); }},
            {"subsample-chain-laws", [this] { return c4_chain_laws(); }},
            {"external-branches", [this] { return c5_external_branches(); }},
            {"oldest-families", [this] { return c6_oldest_families(); }},
            {"window-statistic", [this] { return c7_window_statistic(); }},
            {"ab-decomposition", [this] { return c8_ab_identity(); }},
            {"near-top-variance", [this] { return c9_near_top_variance(); }},
            {"infinitesimal-variance", [this] { return c10_infinitesimal_variance(); }},
            {"ancestor-clt", [this] { return c11_ancestor_clt(); }},
            {"lookdown-consistency", [this] { return c12_lookdown(); }},
            {"engineering", [this] { return c13_engineering(); }},
        };
        int idx = 0;
        for (const auto& [name, fn] : criteria) {
            ++idx;
            if (only != 0 && only != idx) continue;
            auto start = std::chrono::steady_clock::now();
            CriterionResult r;
            r.index = idx;
            r.name = name;
            try {
                auto [pass, detail] = fn();
                r.pass = pass;
                r.detail = detail;
            } catch (const std::exception& e) {
                r.pass = false;
                r.detail = std::string("exception: ") + e.what();
            }
            r.seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                    .count();
            progress << "[" << std::setw(2) << idx << "/13] "
                     << (r.pass ? "PASS" : "FAIL") << "  " << std::left << std::setw(24)
                     << r.name << std::right << " " << r.detail << "  ("
                     << verify_detail::fmt(r.seconds, 3) << " s)\n"
                     << std::flush;
            results.push_back(std::move(r));
        }
        return results;
    }

private:
    using D = Moments4;
    static std::string fmt(double x, int prec = 4) { return verify_detail::fmt(x, prec); }

    // (1) Kingman length mean and variance at n=100 against the closed forms.
    std::pair<bool, std::string> c1_exact_moments() {
        const int n = 100;
        const std::uint64_t reps = 100000;
        std::vector<D> parts(64);
        run_chunked(reps, threads_, [&](unsigned c, std::uint64_t b, std::uint64_t e) {
            for (std::uint64_t rep = b; rep < e; ++rep) {
                RandomStream rng(seed_, "c1-length", rep);
                parts[c].add(tree_length(sample_intercoalescence_times(n, rng)));
            }
        });
        D all;
        for (const auto& p : parts) all.merge(p);
        const double mean_dev =
            std::abs(all.mean() - expected_length_exact(n)) / all.se_mean();
        const double var_dev =
            std::abs(all.variance() - variance_length_exact(n)) / all.se_variance();
        bool pass = mean_dev <= 4.0 && var_dev <= 4.0;
        return {pass, "mean dev " + fmt(mean_dev, 3) + " sigma, variance dev " +
                          fmt(var_dev, 3) + " sigma (n=100, 1e5 reps)"};
    }

    // (2) One-sample KS of half the compensated length against the Gumbel law.
    std::pair<bool, std::string> c2_gumbel() {
        const int n = 10000;
        const std::uint64_t reps = 5000;
        std::vector<double> xs(reps);
        const double comp = 2.0 * std::log(double(n));
        run_chunked(reps, threads_, [&](unsigned, std::uint64_t b, std::uint64_t e) {
            for (std::uint64_t rep = b; rep < e; ++rep) {
                RandomStream rng(seed_, "c2-gumbel", rep);
                xs[rep] = 0.5 * (tree_length(sample_intercoalescence_times(n, rng)) - comp);
            }
        });
        auto r = ks_one_sample(xs, gumbel_cdf, 0.02, 0.01);
        reports_.push_back({"c2_gumbel_ks", r});
        return {r.decision, "KS " + fmt(r.test_statistic) + " vs critical+slack " +
                                fmt(r.threshold) + " (n=1e4, 5000 reps, slack 0.02)"};
    }

    // (3) Monte Carlo coupling gap against the stated closed form
    // 8 sum 1/(i(n+i)).  The finite-n moment oracle is reported alongside:
    // the stated form and the moment-assembled value disagree beyond n=2,
    // so this criterion documents the discrepancy rather than hiding it.
    std::pair<bool, std::string> c3_coupling_gap() {
        bool pass = true;
        std::string detail;
        for (int n : {2, 3, 10, 50}) {
            const std::uint64_t reps = 20000;
            const int i_max = default_i_max(n);
            std::vector<D> parts(64);
            run_chunked(reps, threads_, [&](unsigned c, std::uint64_t b, std::uint64_t e) {
                for (std::uint64_t rep = b; rep < e; ++rep) {
                    RandomStream rng(seed_, "c3-gap", rep * 64 + static_cast<std::uint64_t>(n));
                    auto times = sample_intercoalescence_times(i_max, rng);
                    auto chain = sample_subsample_chain(n, i_max, rng);
                    double d =
                        coupling_temporal(times, n) - coupling_natural(chain, times, n);
                    parts[c].add(d * d);
                }
            });
            D all;
            for (const auto& p : parts) all.merge(p);
            const double formula = coupling_gap_exact(n);
            const double oracle = coupling_gap_from_moments(n, 20000);
            const double dev = std::abs(all.mean() - formula) / all.se_mean();
            const double dev_oracle = std::abs(all.mean() - oracle) / all.se_mean();
            bool ok = dev <= 4.0;
            pass = pass && ok;
            detail += "n=" + std::to_string(n) + ": MC " + fmt(all.mean()) + " vs form " +
                      fmt(formula) + " (" + fmt(dev, 3) + " sigma" +
                      (ok ? "" : " FAIL") + "; moment oracle " + fmt(oracle) + " at " +
                      fmt(dev_oracle, 3) + " sigma)  ";
        }
        return {pass, detail};
    }

    // (4) Chain marginals against the pmf, and the Lemma closed forms
    // against pmf summations at 1e-10.
    std::pair<bool, std::string> c4_chain_laws() {
        double worst_p = 1.0;
        for (int n : {2, 5, 10}) {
            const int i_max = 64;
            const std::uint64_t reps = 6000;
            std::vector<std::vector<double>> counts(
                21, std::vector<double>(static_cast<std::size_t>(n), 0.0));
            for (std::uint64_t rep = 0; rep < reps; ++rep) {
                RandomStream rng(seed_, "c4-chain", rep * 16 + static_cast<std::uint64_t>(n));
                auto chain = sample_subsample_chain(n, i_max, rng);
                for (int i = 2; i <= 20; ++i)
                    counts[static_cast<std::size_t>(i)]
                          [static_cast<std::size_t>(chain.at(i) - 1)] += 1.0;
            }
            for (int i = 2; i <= 20; ++i) {
                std::vector<double> expected(static_cast<std::size_t>(n));
                for (int k = 1; k <= n; ++k)
                    expected[static_cast<std::size_t>(k - 1)] =
                        double(reps) * pmf_k(i, k, n);
                auto r = chi_square_gof(counts[static_cast<std::size_t>(i)], expected, 0.001);
                worst_p = std::min(worst_p, r.estimate);
                if (!r.decision)
                    return {false, "chain marginal chi-square rejected at n=" +
                                       std::to_string(n) + ", i=" + std::to_string(i) +
                                       " (p=" + fmt(r.estimate) + ")"};
            }
        }
        double worst_gap = 0.0;
        for (int n : {2, 3, 10, 25, 50}) {
            for (int i = 1; i <= 50; ++i) {
                double direct1 = 0.0, direct2 = 0.0;
                for (int k = 1; k <= std::min(i, n); ++k) {
                    direct1 += pmf_k(i, k, n) * (i - k);
                    direct2 += pmf_k(i, k, n) * (i - k) * (i - k);
                }
                auto [m1, m2] = moments_k_exact(i, i, n);
                worst_gap = std::max({worst_gap, std::abs(direct1 - m1),
                                      std::abs(direct2 - m2)});
            }
        }
        bool pass = worst_gap < 1e-10;
        return {pass, "marginals pass chi-square (min p " + fmt(worst_p) +
                          "), closed-form vs pmf gap " + fmt(worst_gap, 2)};
    }

    // (5) External branch statistics at n=50 over ~1e5 jumps.
    std::pair<bool, std::string> c5_external_branches() {
        const int n = 50;
        const int paths = 250, events_per_path = 400;
        struct Part {
            std::vector<double> scaled;
            std::vector<double> rank_counts = std::vector<double>(49, 0.0);
            McEstimator path_means;
        };
        std::vector<Part> parts(64);
        run_chunked(paths, threads_, [&](unsigned c, std::uint64_t b, std::uint64_t e) {
            for (std::uint64_t p = b; p < e; ++p) {
                RandomStream rng(seed_, "c5-jumps", p);
                MoranState st = MoranState::equilibrium(n, rng);
                McEstimator batch;
                for (int k = 0; k < events_per_path; ++k) {
                    auto ev = st.next_event(rng);
                    int rank = st.external_attach_rank(ev.dier);
                    auto res = st.apply_event(ev);
                    parts[c].rank_counts[static_cast<std::size_t>(rank - 1)] += 1.0;
                    parts[c].scaled.push_back(n * res.external_branch);
                    batch.add(n * res.external_branch);
                }
                parts[c].path_means.add(batch.mean());
            }
        });
        std::vector<double> scaled, rank_counts(49, 0.0);
        McEstimator means;
        for (auto& p : parts) {
            scaled.insert(scaled.end(), p.scaled.begin(), p.scaled.end());
            for (int f = 0; f < 49; ++f)
                rank_counts[static_cast<std::size_t>(f)] +=
                    p.rank_counts[static_cast<std::size_t>(f)];
            means.merge(p.path_means);
        }
        std::vector<double> expected(49);
        for (int f = 1; f <= 49; ++f)
            expected[static_cast<std::size_t>(f - 1)] =
                double(scaled.size()) * external_branch_pmf_f(n, f);
        auto pmf_r = chi_square_gof(rank_counts, expected, 0.01);
        auto mean_r = means.check_mean(2.0, 4.0);
        auto ks_r = ks_one_sample(scaled, external_branch_limit_cdf, 0.02, 0.01);
        reports_.push_back({"c5_f_pmf_chi2", pmf_r});
        reports_.push_back({"c5_mean_scaled_jump", mean_r});
        reports_.push_back({"c5_jump_law_ks", ks_r});
        bool pass = pmf_r.decision && mean_r.decision && ks_r.decision;
        return {pass, "F pmf p=" + fmt(pmf_r.estimate) + ", mean nJ " +
                          fmt(mean_r.estimate) + " (" + fmt(mean_r.test_statistic, 3) +
                          " sigma), KS " + fmt(ks_r.test_statistic) + " vs " +
                          fmt(ks_r.threshold)};
    }

    // (6) The f oldest families: extinction clock, per-event frequency,
    // composition law.
    std::pair<bool, std::string> c6_oldest_families() {
        const int n = 30;
        std::string detail;
        bool pass = true;
        for (int f : {2, 3, 5}) {
            std::vector<double> times_pooled;
            std::uint64_t events = 0, extinctions = 0;
            for (int w = 0; w < 3; ++w) {
                RandomStream rng(seed_, "c6-window",
                                 static_cast<std::uint64_t>(f) * 8 + static_cast<std::uint64_t>(w));
                MoranState st = MoranState::equilibrium(n, rng);
                st.track_families(f, substream_seed(seed_, "c6-labels",
                                                    static_cast<std::uint64_t>(f) * 8 +
                                                        static_cast<std::uint64_t>(w)));
                const double t_end = st.clock() + 100.0;
                while (true) {
                    auto ev = st.next_event(rng);
                    if (ev.time > t_end) break;
                    st.apply_event(ev);
                    ++events;
                }
                // independent windows glued end to end stay Poisson
                for (double t : st.family().extinction_log)
                    times_pooled.push_back(t + 100.0 * w);
                extinctions += st.family().extinction_log.size();
            }
            auto pois = poisson_process_check(times_pooled, choose2(f), 0.01);
            const double p_event = choose2(f) / choose2(n);
            const double freq = double(extinctions) / double(events);
            const double se = std::sqrt(p_event * (1.0 - p_event) / double(events));
            const double freq_dev = std::abs(freq - p_event) / se;
            bool ok = pois.decision && freq_dev <= 4.0;
            pass = pass && ok;
            detail += "f=" + std::to_string(f) + ": poisson " +
                      (pois.decision ? "ok" : "FAIL") + ", event freq dev " +
                      fmt(freq_dev, 3) + " sigma  ";
            reports_.push_back({"c6_extinction_poisson_f" + std::to_string(f), pois});
        }
        // composition law at n=6, f=3 over the 10 positive compositions
        {
            RandomStream rng(seed_, "c6-occ");
            MoranState st = MoranState::equilibrium(6, rng);
            st.track_families(3, substream_seed(seed_, "c6-occ-labels"));
            std::map<std::tuple<int, int, int>, double> occ;
            std::uint64_t events = 0;
            const std::uint64_t target = 90000;
            while (events < target) {
                auto ev = st.next_event(rng);
                st.apply_event(ev);
                if (++events % 30 == 0)
                    occ[{st.family().sizes[1], st.family().sizes[2],
                         st.family().sizes[3]}] += 1.0;
            }
            std::vector<double> counts, expected;
            double total = 0.0;
            for (auto& [z, c] : occ) total += c;
            for (auto& [z, c] : occ) counts.push_back(c);
            expected.assign(10, total / 10.0);
            counts.resize(10, 0.0);  // unvisited compositions count zero
            auto r = chi_square_gof(counts, expected, 0.001);
            reports_.push_back({"c6_composition_chi2", r});
            pass = pass && r.decision;
            detail += "Z occupancy p=" + fmt(r.estimate);
        }
        return {pass, detail};
    }

    // (7) Window statistic: both adjacent windows disturbed below f.
    std::pair<bool, std::string> c7_window_statistic() {
        const int n = 30, f = 3;
        const double h = 0.05;
        const std::uint64_t reps = 30000;
        std::vector<std::uint64_t> hits(64, 0);
        run_chunked(reps, threads_, [&](unsigned c, std::uint64_t b, std::uint64_t e) {
            for (std::uint64_t rep = b; rep < e; ++rep) {
                RandomStream rng(seed_, "c7-window", rep);
                MoranState st = MoranState::equilibrium(n, rng);
                auto s0 = st.snapshot_merger_times();
                record_path(st, st.clock() + h, rng);
                auto s1 = st.snapshot_merger_times();
                record_path(st, st.clock() + h, rng);
                auto s2 = st.snapshot_merger_times();
                if (window_statistic_f(s0, s1) < f && window_statistic_f(s1, s2) < f)
                    ++hits[c];
            }
        });
        std::uint64_t both = 0;
        for (auto h2 : hits) both += h2;
        const double p1 = 1.0 - std::exp(-choose2(f) * h);
        const double target = p1 * p1;
        const double freq = double(both) / double(reps);
        const double se = std::sqrt(target * (1.0 - target) / double(reps));
        const double dev = std::abs(freq - target) / se;
        return {dev <= 4.0, "P[both<f] " + fmt(freq) + " vs (1-e^{-C(f,2)h})^2 " +
                                fmt(target) + " (" + fmt(dev, 3) + " sigma)"};
    }

    // (8) Per-path identity L(t) - L(0) = gain - loss at 1e-9, closed
    // against a from-scratch recomputation.
    std::pair<bool, std::string> c8_ab_identity() {
        const int n = 100;
        const double t = 0.5;
        const std::uint64_t reps = 10000;
        std::vector<double> worst(64, 0.0);
        run_chunked(reps, threads_, [&](unsigned c, std::uint64_t b, std::uint64_t e) {
            for (std::uint64_t rep = b; rep < e; ++rep) {
                RandomStream rng(seed_, "c8-ab", rep);
                MoranState st = MoranState::equilibrium(n, rng);
                LengthPath path = record_path(st, t, rng);
                auto [gain, loss] = decompose_ab(path, t);
                double fresh = st.recompute_length();
                worst[c] = std::max(worst[c], std::abs(fresh - path.base - (gain - loss)));
            }
        });
        double dev = 0.0;
        for (double w : worst) dev = std::max(dev, w);
        return {dev <= 1e-9,
                "max |L(t)-L(0) - (A-B)| = " + fmt(dev, 3) + " over 1e4 paths"};
    }

    // (9) Near-top variance: Delta integral ratio, B_50 Monte Carlo vs the
    // exact series, and the series asymptote at n=1e6.
    std::pair<bool, std::string> c9_near_top_variance() {
        const double t = 0.01;
        const int i_max = 10000;
        {
            const std::uint64_t reps = 100000;
            std::vector<D> parts(64);
            run_chunked(reps, threads_, [&](unsigned c, std::uint64_t b, std::uint64_t e) {
                for (std::uint64_t rep = b; rep < e; ++rep) {
                    RandomStream rng(seed_, "c9-delta", rep);
                    auto times = sample_intercoalescence_times(i_max, rng);
                    parts[c].add(delta_integral(times, t).value);
                }
            });
            D all;
            for (const auto& p : parts) all.merge(p);
            double ratio = all.variance() / (2.0 / 3.0 * t);
            if (!(ratio >= 0.85 && ratio <= 1.25))
                return {false, "V[Delta_t]/((2/3)t) = " + fmt(ratio) + " outside [0.85,1.25]"};
            detail9_ = "delta ratio " + fmt(ratio);
        }
        {
            const int n = 50;
            const std::uint64_t reps = 20000;
            std::vector<D> parts(64);
            run_chunked(reps, threads_, [&](unsigned c, std::uint64_t b, std::uint64_t e) {
                for (std::uint64_t rep = b; rep < e; ++rep) {
                    RandomStream rng(seed_, "c9-bn", rep);
                    auto times = sample_intercoalescence_times(i_max, rng);
                    auto chain = sample_subsample_chain(n, i_max, rng);
                    double bsample = sample_b(chain, times, n);
                    parts[c].add(bsample * bsample);
                }
            });
            D all;
            for (const auto& p : parts) all.merge(p);
            double exact = variance_b_exact(n, 20000000).value;
            double dev = std::abs(all.mean() - exact) / all.se_mean();
            if (dev > 4.0)
                return {false, "B_50 MC " + fmt(all.mean()) + " vs series " + fmt(exact) +
                                   " (" + fmt(dev, 3) + " sigma)"};
            detail9_ += ", B_50 dev " + fmt(dev, 3) + " sigma";
        }
        {
            const double n = 1e6;
            double ratio =
                variance_b_exact(1000000, 30000000).value / (8.0 * std::log(n) / n);
            if (!(ratio >= 0.9 && ratio <= 1.1))
                return {false, "series/(8 log n / n) = " + fmt(ratio) + " outside [0.9,1.1]"};
            detail9_ += ", series asymptote ratio " + fmt(ratio);
        }
        return {true, detail9_};
    }

    // (10) Infinitesimal variance ratio at n=2000 across three small t,
    // with the trend curve written out for inspection.
    std::pair<bool, std::string> c10_infinitesimal_variance() {
        const int n = 2000;
        const std::uint64_t reps = 20000;
        std::ofstream trend(std::filesystem::path(out_dir_) /
                            "infinitesimal_variance_trend.csv");
        trend << "t,ratio,ci_low,ci_high\n";
        bool pass = true;
        std::string detail;
        for (double t : {0.004, 0.008, 0.016}) {
            const std::string purpose = "c10-t" + std::to_string(int(t * 1000));
            std::vector<D> parts(64);
            run_chunked(reps, threads_, [&](unsigned c, std::uint64_t b, std::uint64_t e) {
                for (std::uint64_t rep = b; rep < e; ++rep) {
                    RandomStream rng(seed_, purpose, rep);
                    MoranState st = MoranState::equilibrium(n, rng);
                    const double l0 = st.length();
                    for (;;) {
                        auto ev = st.next_event(rng);
                        if (ev.time > t) break;
                        st.apply_event(ev);
                    }
                    st.advance_to(t);
                    parts[c].add(st.length() - l0);
                }
            });
            D all;
            for (const auto& p : parts) all.merge(p);
            const double denom = 4.0 * t * std::abs(std::log(t));
            const double ratio = all.variance() / denom;
            const double half = 4.0 * all.se_variance() / denom;
            trend << fmt_g17(t) << ',' << fmt_g17(ratio) << ',' << fmt_g17(ratio - half)
                  << ',' << fmt_g17(ratio + half) << '\n';
            bool ok = ratio >= 0.5 && ratio <= 1.5;
            pass = pass && ok;
            detail += "t=" + fmt(t, 3) + ": ratio " + fmt(ratio, 3) +
                      (ok ? "" : " OUTSIDE [0.5,1.5]") + "  ";
        }
        return {pass, detail + "(trend curve written)"};
    }

    // (11) Ancestor-count CLT and the bivariate correlation.
    std::pair<bool, std::string> c11_ancestor_clt() {
        const double u = 0.005;
        const int i_max = 10000;
        const std::uint64_t reps = 5000;
        std::vector<double> zs(reps);
        run_chunked(reps, threads_, [&](unsigned, std::uint64_t b, std::uint64_t e) {
            for (std::uint64_t rep = b; rep < e; ++rep) {
                RandomStream rng(seed_, "c11-clt", rep);
                auto times = sample_intercoalescence_times(i_max, rng);
                zs[rep] =
                    (ancestor_count(times, u) - 2.0 / u) / std::sqrt(2.0 / (3.0 * u));
            }
        });
        auto ks = ks_one_sample(zs, normal_cdf, 0.05, 0.01);
        reports_.push_back({"c11_normal_ks", ks});

        const double u2 = 0.0025, v2 = 0.01;
        const std::uint64_t reps2 = 100000;
        std::vector<D> sx(64), sy(64), sxy(64);
        run_chunked(reps2, threads_, [&](unsigned c, std::uint64_t b, std::uint64_t e) {
            for (std::uint64_t rep = b; rep < e; ++rep) {
                RandomStream rng(seed_, "c11-bivar", rep);
                auto times = sample_intercoalescence_times(i_max, rng);
                double x = (ancestor_count(times, u2) - 2.0 / u2) /
                           std::sqrt(2.0 / (3.0 * u2));
                double y = (ancestor_count(times, v2) - 2.0 / v2) /
                           std::sqrt(2.0 / (3.0 * v2));
                sx[c].add(x);
                sy[c].add(y);
                sxy[c].add(x * y);
            }
        });
        D ax, ay, axy;
        for (unsigned c = 0; c < 64; ++c) {
            ax.merge(sx[c]);
            ay.merge(sy[c]);
            axy.merge(sxy[c]);
        }
        double corr = (axy.mean() - ax.mean() * ay.mean()) /
                      std::sqrt(ax.variance() * ay.variance());
        bool corr_ok = std::abs(corr - 0.125) <= 0.03;
        bool pass = ks.decision && corr_ok;
        return {pass, "normal KS " + fmt(ks.test_statistic) + " vs " + fmt(ks.threshold) +
                          ", corr(u/v=1/4) " + fmt(corr) + " vs 0.125"};
    }

    // (12) Lookdown vs Moran length law and the nested path convergence.
    std::pair<bool, std::string> c12_lookdown() {
        const std::uint64_t reps = 500;
        std::vector<double> ld(reps), moran(reps);
        run_chunked(reps, threads_, [&](unsigned, std::uint64_t b, std::uint64_t e) {
            for (std::uint64_t rep = b; rep < e; ++rep) {
                RandomStream ra(seed_, "c12-ld", rep);
                auto w = sample_window(100, 0.0, 1.0, ra);
                ld[rep] = length_path_ld(w, 100).compensated(1.0);
                RandomStream rb(seed_, "c12-moran", rep);
                MoranState st = MoranState::equilibrium(100, rb);
                record_path(st, 0.5, rb);
                moran[rep] = st.compensated_length();
            }
        });
        auto ks = ks_two_sample(ld, moran, 0.01);
        reports_.push_back({"c12_lookdown_vs_moran_ks", ks});

        const std::vector<int> sizes{25, 50, 100, 200};
        const std::uint64_t n_windows = 60;
        std::vector<LookdownWindow> windows(n_windows);
        run_chunked(n_windows, threads_, [&](unsigned, std::uint64_t b, std::uint64_t e) {
            for (std::uint64_t rep = b; rep < e; ++rep) {
                RandomStream rng(seed_, "c12-nested", rep);
                windows[rep] = sample_window(200, 0.0, 1.0, rng);
            }
        });
        auto nested = nested_convergence_report(windows, sizes, 1.0 / 256.0);
        reports_.push_back({"c12_nested_skorokhod", nested});
        bool pass = ks.decision && nested.decision;
        return {pass, "two-sample KS " + fmt(ks.test_statistic) + " vs " +
                          fmt(ks.threshold) + "; " + nested.provenance.parameters +
                          (nested.decision ? "" : " NOT DECREASING")};
    }

    // (13) Engineering: differential length over 1e6 fuzzed events,
    // same-seed byte identity, replay round-trip, parse errors.
    std::pair<bool, std::string> c13_engineering() {
        {
            RandomStream rng(seed_, "c13-fuzz");
            MoranState st = MoranState::equilibrium(100, rng);
            for (int block = 0; block < 500; ++block) {
                for (int k = 0; k < 2000; ++k) st.apply_event(st.next_event(rng));
                double fresh = st.recompute_length();
                if (std::abs(st.length() - fresh) > 1e-9 * std::max(1.0, fresh))
                    return {false, "differential test diverged at block " +
                                       std::to_string(block)};
                if (!st.validate()) return {false, "tree invariant violated"};
            }
        }
        RunConfig cfg;
        cfg.command = "moran";
        cfg.n = 100;
        cfg.t_end = 10.0;
        cfg.seed = seed_ ^ 0x6d6f72616eULL;
        std::ostringstream csv1, csv2, log1, log2;
        run_moran_streams(cfg, csv1, &log1);
        run_moran_streams(cfg, csv2, &log2);
        if (csv1.str() != csv2.str() || log1.str() != log2.str())
            return {false, "same-seed moran outputs are not byte-identical"};

        RunConfig lcfg;
        lcfg.command = "lookdown";
        lcfg.n = 50;
        lcfg.n_max = 100;
        lcfg.t_end = 1.0;
        lcfg.seed = cfg.seed + 1;
        std::ostringstream lcsv1, lcsv2, llog1, llog2;
        run_lookdown_streams(lcfg, lcsv1, &llog1);
        run_lookdown_streams(lcfg, lcsv2, &llog2);
        if (lcsv1.str() != lcsv2.str() || llog1.str() != llog2.str())
            return {false, "same-seed lookdown outputs are not byte-identical"};

        std::istringstream replay_in(log1.str());
        auto sum = replay(replay_in);
        if (!sum.ok || sum.max_snapshot_deviation > 1e-9)
            return {false, "moran replay deviated by " + fmt(sum.max_snapshot_deviation)};
        std::istringstream lreplay_in(llog1.str());
        auto lsum = replay(lreplay_in);
        if (!lsum.ok) return {false, "lookdown replay deviated"};

        bool threw = false;
        try {
            std::string broken = log1.str().substr(0, log1.str().size() / 2) + "{oops\n";
            std::istringstream bad(broken);
            replay(bad);
        } catch (const LogParseError&) {
            threw = true;
        }
        if (!threw) return {false, "corrupt log did not raise a parse error"};
        return {true, "differential 1e6 events ok, byte-identical reruns, replay dev " +
                          fmt(sum.max_snapshot_deviation, 3)};
    }

    std::uint64_t seed_;
    std::string out_dir_;
    unsigned threads_;
    std::string detail9_;
    std::vector<NamedReport> reports_;

public:
    const std::vector<NamedReport>& reports() const { return reports_; }
};

inline std::vector<CriterionResult> run_verification(std::uint64_t seed,
                                                     const std::string& out_dir,
                                                     unsigned threads,
                                                     std::ostream& progress,
                                                     int only = 0) {
    VerificationRun run(seed, out_dir, threads);
    auto results = run.run_all(progress, only);
    std::ofstream table(std::filesystem::path(out_dir.empty() ? "." : out_dir) /
                        "verify_reports.csv");
    write_reports_csv(table, run.reports());
    return results;
}

}  // namespace evocoal
