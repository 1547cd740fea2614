// =============================================================================
// stats.hpp — Statistical machinery for the verification harness.
//
// Gumbel distribution functions, one/two-sample Kolmogorov-Smirnov,
// chi-square goodness of fit, a three-part Poisson-process diagnostic,
// mergeable Monte Carlo estimators with normal + bootstrap intervals, and
// a dynamic-programming approximation of the Skorokhod J1 distance for
// piecewise-linear-with-jumps paths.
//
// Convention: every test returns a StatReport whose decision is
//     pass  <=>  test_statistic <= threshold
// with one-sided thresholds built from the requested significance level
// (plus, for limit-law tests, a declared finite-size slack).
// =============================================================================
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include "evocoal/numeric.hpp"
#include "evocoal/random.hpp"

namespace evocoal {

struct Provenance {
    std::uint64_t seed = 0;
    std::string parameters;
    std::uint64_t replicates = 0;
};

struct StatReport {
    double estimate = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double test_statistic = 0.0;
    double threshold = 0.0;
    bool decision = false;
    Provenance provenance;
};

// ---------------------------------------------------------------------------
// Distribution helpers
// ---------------------------------------------------------------------------

inline double gumbel_cdf(double x) { return std::exp(-std::exp(-x)); }

inline double gumbel_quantile(double p) {
    require(p > 0.0 && p < 1.0, "gumbel_quantile: p must lie in (0,1)");
    return -std::log(-std::log(p));
}

inline double gumbel_sample(RandomStream& rng) {
    double p;
    do {
        p = rng.uniform01_halfopen();
    } while (p <= 0.0);
    return gumbel_quantile(p);
}

inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

inline double normal_quantile(double p) {
    boost::math::normal dist;
    return boost::math::quantile(dist, p);
}

inline double chi_squared_quantile(double dof, double p) {
    boost::math::chi_squared dist(dof);
    return boost::math::quantile(dist, p);
}

inline double chi_squared_cdf(double dof, double x) {
    boost::math::chi_squared dist(dof);
    return boost::math::cdf(dist, x);
}

// Asymptotic one-sample KS critical value: P[sup dev > c/sqrt(n)] ~ alpha.
inline double ks_critical(double alpha) {
    return std::sqrt(-0.5 * std::log(alpha / 2.0));
}

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov
// ---------------------------------------------------------------------------

inline double ks_statistic_one_sample(std::vector<double> samples,
                                      const std::function<double(double)>& cdf) {
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        double f = cdf(samples[i]);
        d = std::max(d, std::abs(f - static_cast<double>(i) / n));
        d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
    }
    return d;
}

// One-sample KS against a target cdf.  `slack` widens the acceptance band
// for laws that hold only in an N->infinity limit; it is recorded via the
// threshold so the report stays honest about what was tested.
inline StatReport ks_one_sample(const std::vector<double>& samples,
                                const std::function<double(double)>& cdf,
                                double slack = 0.0, double alpha = 0.01) {
    require(samples.size() >= 50, "ks_one_sample: need at least 50 samples");
    StatReport r;
    r.test_statistic = ks_statistic_one_sample(samples, cdf);
    r.threshold = ks_critical(alpha) / std::sqrt(static_cast<double>(samples.size())) + slack;
    r.decision = r.test_statistic <= r.threshold;
    r.estimate = r.test_statistic;
    r.ci_low = r.ci_high = r.test_statistic;
    r.provenance.replicates = samples.size();
    return r;
}

inline double ks_statistic_two_sample(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

inline StatReport ks_two_sample(const std::vector<double>& a,
                                const std::vector<double>& b,
                                double alpha = 0.01) {
    require(a.size() >= 50 && b.size() >= 50, "ks_two_sample: need at least 50 samples");
    StatReport r;
    r.test_statistic = ks_statistic_two_sample(a, b);
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    r.threshold = ks_critical(alpha) * std::sqrt((na + nb) / (na * nb));
    r.decision = r.test_statistic <= r.threshold;
    r.estimate = r.test_statistic;
    r.ci_low = r.ci_high = r.test_statistic;
    r.provenance.replicates = a.size() + b.size();
    return r;
}

// ---------------------------------------------------------------------------
// Chi-square goodness of fit
// ---------------------------------------------------------------------------

// Cells with expected count < 5 are merged into their right neighbour
// (last cell merges left).  dof = merged cells - 1.
inline StatReport chi_square_gof(const std::vector<double>& counts,
                                 const std::vector<double>& expected,
                                 double alpha = 0.01) {
    require(counts.size() == expected.size() && !counts.empty(),
            "chi_square_gof: size mismatch");
    double total_expected = 0.0;
    for (double e : expected) total_expected += e;
    require(total_expected > 0.0, "chi_square_gof: degenerate expected vector");

    std::vector<double> oc, ec;
    double o_acc = 0.0, e_acc = 0.0;
    for (std::size_t k = 0; k < counts.size(); ++k) {
        o_acc += counts[k];
        e_acc += expected[k];
        if (e_acc >= 5.0) {
            oc.push_back(o_acc);
            ec.push_back(e_acc);
            o_acc = e_acc = 0.0;
        }
    }
    if (e_acc > 0.0) {
        if (ec.empty()) {
            oc.push_back(o_acc);
            ec.push_back(e_acc);
        } else {
            oc.back() += o_acc;
            ec.back() += e_acc;
        }
    }
    require(ec.size() >= 2, "chi_square_gof: fewer than two usable cells");

    double stat = 0.0;
    for (std::size_t k = 0; k < ec.size(); ++k) {
        double d = oc[k] - ec[k];
        stat += d * d / ec[k];
    }
    const double dof = static_cast<double>(ec.size() - 1);

    StatReport r;
    r.test_statistic = stat;
    r.threshold = chi_squared_quantile(dof, 1.0 - alpha);
    r.decision = stat <= r.threshold;
    r.estimate = 1.0 - chi_squared_cdf(dof, stat);  // p-value
    r.ci_low = r.ci_high = r.estimate;
    return r;
}

// ---------------------------------------------------------------------------
// Poisson process diagnostic
// ---------------------------------------------------------------------------

// Three coupled checks on an event stream claimed to be Poisson(rate):
//   (a) KS of inter-event gaps against Exp(rate),
//   (b) lag-1 gap autocorrelation confidence interval containing 0,
//   (c) dispersion index of counts in equal bins containing 1.
// Each sub-test runs at alpha/3; the reported statistic is the worst
// sub-test statistic normalized by its threshold, so pass <=> stat <= 1.
inline StatReport poisson_process_check(const std::vector<double>& event_times,
                                        double rate, double alpha = 0.01) {
    require(event_times.size() >= 100, "poisson_process_check: need >= 100 events");
    require(rate > 0.0, "poisson_process_check: rate must be positive");
    const double sub_alpha = alpha / 3.0;

    std::vector<double> gaps(event_times.size() - 1);
    for (std::size_t i = 0; i + 1 < event_times.size(); ++i) {
        gaps[i] = event_times[i + 1] - event_times[i];
    }

    // (a) gap law
    auto exp_cdf = [rate](double x) { return x <= 0.0 ? 0.0 : 1.0 - std::exp(-rate * x); };
    double ks = ks_statistic_one_sample(gaps, exp_cdf);
    double ks_thr = ks_critical(sub_alpha) / std::sqrt(static_cast<double>(gaps.size()));

    // (b) lag-1 autocorrelation
    double mean = 0.0;
    for (double g : gaps) mean += g;
    mean /= static_cast<double>(gaps.size());
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < gaps.size(); ++i) {
        double d = gaps[i] - mean;
        den += d * d;
        if (i + 1 < gaps.size()) num += d * (gaps[i + 1] - mean);
    }
    double r1 = den > 0.0 ? num / den : 0.0;
    double r1_thr = normal_quantile(1.0 - sub_alpha / 2.0) /
                    std::sqrt(static_cast<double>(gaps.size()));

    // (c) dispersion of bin counts
    const std::size_t bins = std::max<std::size_t>(10, event_times.size() / 20);
    const double t0 = event_times.front();
    const double span = event_times.back() - t0;
    std::vector<double> counts(bins, 0.0);
    for (double t : event_times) {
        auto b = static_cast<std::size_t>((t - t0) / span * static_cast<double>(bins));
        counts[std::min(b, bins - 1)] += 1.0;
    }
    double cmean = 0.0;
    for (double c : counts) cmean += c;
    cmean /= static_cast<double>(bins);
    double cvar = 0.0;
    for (double c : counts) cvar += (c - cmean) * (c - cmean);
    cvar /= static_cast<double>(bins - 1);
    double dispersion = cvar / cmean;
    // (bins-1) * dispersion ~ chi^2_{bins-1} under the null
    const double dofb = static_cast<double>(bins - 1);
    double disp_lo = chi_squared_quantile(dofb, sub_alpha / 2.0) / dofb;
    double disp_hi = chi_squared_quantile(dofb, 1.0 - sub_alpha / 2.0) / dofb;
    // Normalize to a one-sided excess over the admissible band.
    double disp_excess;
    if (dispersion < disp_lo)
        disp_excess = (disp_lo - dispersion) / (disp_lo > 0.0 ? disp_lo : 1.0) + 1.0;
    else if (dispersion > disp_hi)
        disp_excess = dispersion / disp_hi;
    else
        disp_excess = dispersion / disp_hi;  // <= 1 inside the band

    StatReport r;
    double worst = std::max({ks / ks_thr, std::abs(r1) / r1_thr, disp_excess});
    r.test_statistic = worst;
    r.threshold = 1.0;
    r.decision = worst <= 1.0;
    r.estimate = dispersion;
    r.ci_low = disp_lo;
    r.ci_high = disp_hi;
    r.provenance.replicates = event_times.size();
    return r;
}

// ---------------------------------------------------------------------------
// Monte Carlo estimator
// ---------------------------------------------------------------------------

// Streaming moments plus a bounded uniform reservoir for the percentile
// bootstrap.  Merging two accumulators is commutative up to floating-point
// reassociation; merge order is fixed by the callers that require
// bit-reproducible output.
class McEstimator {
public:
    explicit McEstimator(std::size_t reservoir_capacity = 4096)
        : capacity_(reservoir_capacity) {}

    void add(double x) {
        ++count_;
        sum_.add(x);
        sumsq_.add(x * x);
        if (reservoir_.size() < capacity_) {
            reservoir_.push_back(x);
        } else {
            // Deterministic reservoir replacement keyed on the value count.
            std::uint64_t s = 0x5851f42d4c957f2dULL ^ (count_ * 0x9e3779b97f4a7c15ULL);
            std::uint64_t j = splitmix64(s) % count_;
            if (j < capacity_) reservoir_[static_cast<std::size_t>(j)] = x;
        }
    }

    void merge(const McEstimator& other) {
        count_ += other.count_;
        sum_.add(other.sum_.value());
        sumsq_.add(other.sumsq_.value());
        for (double x : other.reservoir_) {
            if (reservoir_.size() < capacity_)
                reservoir_.push_back(x);
            else
                break;
        }
    }

    std::uint64_t count() const { return count_; }
    double mean() const { return sum_.value() / static_cast<double>(count_); }

    double variance() const {
        double n = static_cast<double>(count_);
        double m = mean();
        double v = (sumsq_.value() - n * m * m) / (n - 1.0);
        return v > 0.0 ? v : 0.0;
    }

    double std_error() const { return std::sqrt(variance() / static_cast<double>(count_)); }

    // Normal-approximation CI for the mean.
    StatReport report(double alpha = 0.05, std::uint64_t bootstrap_seed = 1) const {
        StatReport r;
        require(count_ >= 2, "McEstimator: need at least 2 values");
        r.estimate = mean();
        double z = normal_quantile(1.0 - alpha / 2.0);
        r.ci_low = r.estimate - z * std_error();
        r.ci_high = r.estimate + z * std_error();
        r.provenance.replicates = count_;

        // Percentile bootstrap on the reservoir (1000 resamples).
        if (reservoir_.size() >= 16) {
            RandomStream rng(bootstrap_seed, "bootstrap");
            const std::size_t m = reservoir_.size();
            std::vector<double> boots(1000);
            for (auto& b : boots) {
                double acc = 0.0;
                for (std::size_t k = 0; k < m; ++k)
                    acc += reservoir_[rng.uniform_below(m)];
                b = acc / static_cast<double>(m);
            }
            std::sort(boots.begin(), boots.end());
            auto lo = static_cast<std::size_t>(alpha / 2.0 * 1000.0);
            auto hi = static_cast<std::size_t>((1.0 - alpha / 2.0) * 1000.0) - 1;
            // Report the wider of the two intervals.
            r.ci_low = std::min(r.ci_low, boots[lo]);
            r.ci_high = std::max(r.ci_high, boots[hi]);
        }
        return r;
    }

    // Decision-style report: does the CI (at the 4-sigma-equivalent level
    // implied by `z`) contain `target`?
    StatReport check_mean(double target, double z = 4.0) const {
        StatReport r;
        r.estimate = mean();
        double se = std_error();
        r.ci_low = r.estimate - z * se;
        r.ci_high = r.estimate + z * se;
        r.test_statistic = se > 0.0 ? std::abs(r.estimate - target) / se
                                    : std::abs(r.estimate - target);
        r.threshold = z;
        r.decision = r.test_statistic <= r.threshold;
        r.provenance.replicates = count_;
        return r;
    }

    const std::vector<double>& reservoir() const { return reservoir_; }

private:
    std::size_t capacity_;
    std::uint64_t count_ = 0;
    KahanSum sum_;
    KahanSum sumsq_;
    std::vector<double> reservoir_;
};

// First four moments with deterministic merging.  The fourth moment buys an
// honest standard error for variance estimates, which the normal
// approximation sqrt(2/n) s^2 understates on skewed laws.
struct Moments4 {
    KahanSum s1, s2, s3, s4;
    std::uint64_t count = 0;

    void add(double x) {
        ++count;
        s1.add(x);
        double x2 = x * x;
        s2.add(x2);
        s3.add(x2 * x);
        s4.add(x2 * x2);
    }
    void merge(const Moments4& o) {
        count += o.count;
        s1.add(o.s1.value());
        s2.add(o.s2.value());
        s3.add(o.s3.value());
        s4.add(o.s4.value());
    }
    double mean() const { return s1.value() / double(count); }
    double variance() const {
        double mu = mean();
        return s2.value() / double(count) - mu * mu;
    }
    double se_mean() const { return std::sqrt(variance() / double(count)); }
    double se_variance() const {
        double mu = mean();
        double m2 = variance();
        double m4 = s4.value() / double(count) - 4.0 * mu * s3.value() / double(count) +
                    6.0 * mu * mu * s2.value() / double(count) - 3.0 * mu * mu * mu * mu;
        double v = (m4 - m2 * m2) / double(count);
        return v > 0.0 ? std::sqrt(v) : 0.0;
    }
};

// ---------------------------------------------------------------------------
// Approximate Skorokhod distance
// ---------------------------------------------------------------------------

// Discrete min-max search over monotone time changes on a uniform grid:
// minimizes max(sup |a - b o warp|, sup |warp - id|).  Guarantees:
// 0 for identical paths, symmetric, and bounded above by the unwarped
// grid sup-difference.  It is a grid approximation of the J1 distance,
// adequate for monotone-trend diagnostics.
inline double skorokhod_distance_approx(const std::function<double(double)>& path_a,
                                        const std::function<double(double)>& path_b,
                                        double window_start, double window_end,
                                        double grid_resolution) {
    require(window_end > window_start, "skorokhod: empty window");
    require(grid_resolution > 0.0, "skorokhod: grid_resolution must be positive");
    const auto m = static_cast<std::size_t>(
        std::ceil((window_end - window_start) / grid_resolution));
    const std::size_t np = m + 1;
    std::vector<double> ta(np), va(np), vb(np);
    for (std::size_t k = 0; k < np; ++k) {
        ta[k] = window_start + (window_end - window_start) * static_cast<double>(k) /
                                   static_cast<double>(m);
        va[k] = path_a(ta[k]);
        vb[k] = path_b(ta[k]);
    }

    // dp[i][j]: best achievable max-cost for warping prefix i of a onto
    // prefix j of b; rolled over rows.
    const double inf = INFINITY;
    std::vector<double> prev(np, inf), cur(np, inf);
    auto cost = [&](std::size_t i, std::size_t j) {
        return std::max(std::abs(va[i] - vb[j]), std::abs(ta[i] - ta[j]));
    };
    prev[0] = cost(0, 0);
    for (std::size_t j = 1; j < np; ++j) prev[j] = std::max(prev[j - 1], cost(0, j));
    for (std::size_t i = 1; i < np; ++i) {
        cur[0] = std::max(prev[0], cost(i, 0));
        for (std::size_t j = 1; j < np; ++j) {
            double best = std::min({prev[j], cur[j - 1], prev[j - 1]});
            cur[j] = std::max(best, cost(i, j));
        }
        std::swap(prev, cur);
    }
    return prev[np - 1];
}

}  // namespace evocoal
