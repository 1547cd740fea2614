// =============================================================================
// kingman.hpp — Fixed-time Kingman coalescent: exact laws and couplings.
//
// Closed-form oracles (length moments, subsample-chain pmfs, coupling-gap
// and length-difference series) live next to the samplers they verify.
// The infinite tree is truncated at i_max lines; every truncated tail is
// replaced by its exact mean, with O(1/i_max) residual variance.
// =============================================================================
#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "evocoal/coalescent_tree.hpp"
#include "evocoal/numeric.hpp"
#include "evocoal/random.hpp"

namespace evocoal {

// Default truncation level for the "coming down from infinity" regime.
inline int default_i_max(int n) { return std::max(10000, 100 * n); }

inline double expected_length_exact(int n) {
    require(n >= 2, "expected_length_exact: population size must be >= 2");
    return 2.0 * harmonic(static_cast<std::uint64_t>(n) - 1);
}

inline double variance_length_exact(int n) {
    require(n >= 2, "variance_length_exact: population size must be >= 2");
    return 4.0 * harmonic2(static_cast<std::uint64_t>(n) - 1);
}

// ---------------------------------------------------------------------------
// Temporal coupling
// ---------------------------------------------------------------------------

// Lambda_1: length of the subtree below the level where the shared infinite
// tree comes down to n lines, compensated by 2 log n.
inline double coupling_temporal(const InterCoalescenceTimes& times, int n) {
    require(n >= 2, "coupling_temporal: population size must be >= 2");
    if (n > times.n) throw std::invalid_argument("coupling_temporal: truncation exceeded");
    KahanSum s;
    for (int k = 2; k <= n; ++k) s.add(static_cast<double>(k) * times.span(k));
    return s.value() - 2.0 * std::log(static_cast<double>(n));
}

// ---------------------------------------------------------------------------
// The subsample chain K^N
// ---------------------------------------------------------------------------

// P[K_i = k] for a size-n subsample of the infinite coalescent while the
// full tree has i lines.
inline double pmf_k(int i, int k, int n) {
    require(i >= 1 && n >= 1, "pmf_k: invalid argument");
    require(k >= 1 && k <= n, "pmf_k: invalid argument");
    if (k > i) return 0.0;
    long double lg = log_choose_l(n - 1, n - k) + log_choose_l(i, k) -
                     log_choose_l(n + i - 1, n);
    return static_cast<double>(std::exp(lg));
}

// P[K_j = l | K_i = k] for i <= j, k <= l.
inline double conditional_pmf_k(int j, int l, int i, int k, int n) {
    require(i >= 1 && i <= j, "conditional_pmf_k: invalid argument");
    require(k >= 1 && k <= l && l <= n, "conditional_pmf_k: invalid argument");
    if (l - k > j - i) return 0.0;  // at most one gain per full-tree level
    long double lg = log_choose_l(n - k, n - l) + log_choose_l(j + k - 1, i + l - 1) -
                     log_choose_l(n + j - 1, n + i - 1);
    return static_cast<double>(std::exp(lg));
}

// Joint law P[K_i = k, K_j = l], i <= j.
inline double joint_pmf_k(int i, int k, int j, int l, int n) {
    require(i >= 1 && i <= j, "joint_pmf_k: invalid argument");
    require(k >= 1 && k <= l && l <= n, "joint_pmf_k: invalid argument");
    double base = pmf_k(i, k, n);
    if (base == 0.0) return 0.0;
    return base * conditional_pmf_k(j, l, i, k, n);
}

// Closed forms E[i - K_i] and E[(i - K_i)(j - K_j)], i <= j.
inline std::pair<double, double> moments_k_exact(int i, int j, int n) {
    require(i >= 1 && i <= j, "moments_k_exact: invalid argument");
    require(n >= 2, "moments_k_exact: invalid argument");
    const double di = i, dj = j, dn = n;
    double first = di * (di - 1.0) / (dn + di - 1.0);
    double second = di * (di - 1.0) * dj * (dj - 1.0) / ((dn + di - 1.0) * (dn + dj - 1.0)) +
                    di * (di - 1.0) * dn * (dn - 1.0) /
                        ((dn + dj - 1.0) * (dn + di - 1.0) * (dn + di - 2.0));
    return {first, second};
}

// Backward dynamics of the chain: at the transition i -> i-1 the subsample
// count drops by one with probability C(K,2)/C(i,2).
class SubsampleChainWalker {
public:
    SubsampleChainWalker(int n, int i_max, RandomStream& rng) : n_(n), i_(i_max) {
        require(n >= 2 && n <= i_max, "subsample chain: need 2 <= n <= i_max");
        if (n == i_max) {
            k_ = i_max;  // the subsample is the full tree
        } else {
            std::vector<double> w(static_cast<std::size_t>(n));
            for (int k = 1; k <= n; ++k)
                w[static_cast<std::size_t>(k - 1)] = pmf_k(i_max, k, n);
            k_ = static_cast<int>(rng.discrete(w)) + 1;
        }
    }

    int i() const { return i_; }
    int k() const { return k_; }

    // Move from i to i-1; returns the new subsample count.
    int step(RandomStream& rng) {
        if (k_ >= i_) {  // stuck to the diagonal
            k_ = --i_;
            return k_;
        }
        double p = choose2(k_) / choose2(i_);
        if (rng.uniform01_halfopen() < p) --k_;
        --i_;
        return k_;
    }

private:
    int n_;
    int i_;
    int k_;
};

struct SubsampleChain {
    int n = 0;
    int i_max = 0;
    std::vector<int> k;  // k[i] valid for i = 1..i_max

    int at(int i) const { return k[static_cast<std::size_t>(i)]; }
};

inline SubsampleChain sample_subsample_chain(int n, int i_max, RandomStream& rng) {
    SubsampleChain c;
    c.n = n;
    c.i_max = i_max;
    c.k.assign(static_cast<std::size_t>(i_max) + 1, 0);
    SubsampleChainWalker w(n, i_max, rng);
    c.k[static_cast<std::size_t>(i_max)] = w.k();
    for (int i = i_max; i >= 2; --i) c.k[static_cast<std::size_t>(i) - 1] = w.step(rng);
    return c;
}

// ---------------------------------------------------------------------------
// Natural coupling
// ---------------------------------------------------------------------------

// Lambda_2: compensated length of the size-n leaf subsample, computed along
// the same realization as the chain and times.  The sum beyond i_max is
// replaced by its exact mean 2 * sum_{k=0}^{n-1} 1/(i_max + k); when the
// subsample is the full truncated tree there is no tail and Lambda_2 equals
// Lambda_1 identically.
inline double coupling_natural(const SubsampleChain& chain,
                               const InterCoalescenceTimes& times, int n) {
    require(chain.i_max == times.n && chain.n == n,
            "coupling_natural: mismatched realization lengths");
    KahanSum s;
    for (int i = 2; i <= chain.i_max; ++i)
        s.add(static_cast<double>(chain.at(i)) * times.span(i));
    if (n < chain.i_max) {
        KahanSum tail;
        for (int k = 0; k < n; ++k)
            tail.add(2.0 / static_cast<double>(chain.i_max + k));
        s.add(tail.value());
    }
    return s.value() - 2.0 * std::log(static_cast<double>(n));
}

// E[(Lambda_1 - Lambda_2)^2] = 8 sum_{i=1}^{n-1} 1/(i(n+i)): the closed form
// stated for the coupling gap, asymptotically 8 log n / n.
inline double coupling_gap_exact(int n) {
    require(n >= 2, "coupling_gap_exact: population size must be >= 2");
    KahanSum s;
    for (int i = 1; i < n; ++i)
        s.add(1.0 / (static_cast<double>(i) * static_cast<double>(n + i)));
    return 8.0 * s.value();
}

// E[(Lambda_1 - Lambda_2)^2] assembled term by term from the chain's moment
// closed forms with no distributional shortcut: writing the gap as
// sum_i c_i X_i with c_i = i 1[i<=n] - K_i, every E[c_i c_j] reduces to the
// two Lemma moments, and K,X independence does the rest.  Truncated at
// m_cap full-tree lines with an O(1/m_cap) tail.  Serves as the finite-n
// oracle for the Monte Carlo couplings.
inline double coupling_gap_from_moments(int n, int m_cap) {
    require(n >= 2 && m_cap > n, "coupling_gap_from_moments: need m_cap > n >= 2");
    const double dn = n;
    auto l11a = [dn](double i) { return i * (i - 1.0) / (dn + i - 1.0); };
    auto l11b = [dn, &l11a](double i, double j) {  // i <= j
        return l11a(i) * j * (j - 1.0) / (dn + j - 1.0) +
               i * (i - 1.0) * dn * (dn - 1.0) /
                   ((dn + j - 1.0) * (dn + i - 1.0) * (dn + i - 2.0));
    };
    KahanSum total;
    for (int i = 2; i <= m_cap; ++i) {
        const double di = i;
        const double exi = 2.0 / (di * (di - 1.0));
        double row = 0.0;
        for (int j = i; j <= m_cap; ++j) {
            const double dj = j;
            double cc = l11b(di, dj);
            if (i <= n && j > n) cc -= dj * l11a(di);
            if (i > n) cc += di * dj - di * l11a(dj) - dj * l11a(di);
            // diagonal: E[X_i^2] = 2 E[X_i]^2; off-diagonal: the (j,i) twin.
            // Either way the upper-triangle term enters twice.
            row += 2.0 * cc * exi * (2.0 / (dj * (dj - 1.0)));
        }
        total.add(row);
    }
    return total.value();
}

// ---------------------------------------------------------------------------
// Variance of the length difference B_n (infinite vs subsampled tree)
// ---------------------------------------------------------------------------

struct VarianceBResult {
    double value = 0.0;
    double truncation_bound = 0.0;  // certified bound on the omitted tail
};

// E[B_n^2] as the double series over (i, j), with the inner i-sum collapsed
// through its exact telescoping identity
//   sum_{i=2}^{j-1} 1/((n+i-1)(n+i-2)) = 1/n - 1/(n+j-2),
// plus the one-dimensional remainder terms.  All terms are nonnegative, so
// partial sums increase monotonically toward the value.
inline VarianceBResult variance_b_exact(int n, long long j_max,
                                        double tolerance = INFINITY) {
    require(n >= 2, "variance_b_exact: population size must be >= 2");
    require(j_max >= 3, "variance_b_exact: j_max too small");
    const double dn = n;

    KahanSum s1;  // 8 (n-1) sum_{j>=3} (j-2) / (j (j-1) (n+j-1) (n+j-2))
    for (long long j = 3; j <= j_max; ++j) {
        const double dj = static_cast<double>(j);
        s1.add((dj - 2.0) / (dj * (dj - 1.0) * (dn + dj - 1.0) * (dn + dj - 2.0)));
    }
    const double dJ = static_cast<double>(j_max);
    double s1_tail = 8.0 * (dn - 1.0) / ((dn + dJ - 1.0) * (dJ - 1.0));

    KahanSum s2;  // 8 n (n-1) sum_{i>=2} 1 / (i (i-1) (n+i-1)^2 (n+i-2))
    const long long i_cap = std::min<long long>(j_max, 2'000'000);
    for (long long i = 2; i <= i_cap; ++i) {
        const double di = static_cast<double>(i);
        s2.add(1.0 / (di * (di - 1.0) * (dn + di - 1.0) * (dn + di - 1.0) * (dn + di - 2.0)));
    }
    const double dI = static_cast<double>(i_cap);
    double s2_tail = 8.0 * dn * (dn - 1.0) /
                     ((dn + dI - 1.0) * (dn + dI - 1.0) * (dn + dI - 1.0) * dI);

    // 4 sum_{i>=2} (n+i-1)^{-2} = 4 (pi^2/6 - sum_{m<=n} m^{-2}), exact.
    double s3 = 4.0 * (1.6449340668482264365 - harmonic2(static_cast<std::uint64_t>(n)));

    VarianceBResult r;
    r.value = 8.0 * (dn - 1.0) * s1.value() + 8.0 * dn * (dn - 1.0) * s2.value() + s3;
    r.truncation_bound = s1_tail + s2_tail;
    if (!(r.truncation_bound <= tolerance))
        throw std::runtime_error("variance_b_exact: truncation error above tolerance");
    return r;
}

// One draw of B_n along a shared realization, truncated at times.n lines and
// compensated by the exact means E[i - K_i] E[X_i] = 2/(n+i-1).
inline double sample_b(const SubsampleChain& chain, const InterCoalescenceTimes& times,
                       int n) {
    require(chain.i_max == times.n && chain.n == n, "sample_b: mismatched realizations");
    KahanSum s;
    for (int i = 2; i <= chain.i_max; ++i) {
        double gap = static_cast<double>(i - chain.at(i)) * times.span(i);
        s.add(gap - 2.0 / static_cast<double>(n + i - 1));
    }
    return s.value();
}

// ---------------------------------------------------------------------------
// Ancestors near the tree top
// ---------------------------------------------------------------------------

// T_m: time for the (truncated) coalescent to come down to m lines.  The
// tail above i_max lines is replaced by its exact mean 2/i_max.
inline double coming_down_time(const InterCoalescenceTimes& times, int m) {
    require(m >= 1 && m <= times.n, "coming_down_time: invalid level");
    KahanSum s;
    s.add(2.0 / static_cast<double>(times.n));
    for (int i = m + 1; i <= times.n; ++i) s.add(times.span(i));
    return s.value();
}

inline double sample_t_n(int n, int i_max, RandomStream& rng) {
    require(n < i_max, "sample_t_n: need n < i_max");
    auto times = sample_intercoalescence_times(i_max, rng);
    return coming_down_time(times, n);
}

// S_u: number of ancestors at lookback u, i.e. the smallest m with
// T_m <= u on this realization.  Saturates at i_max when u falls inside
// the deterministic truncation span.
inline int ancestor_count(const InterCoalescenceTimes& times, double u) {
    require(u > 0.0, "ancestor_count: lookback must be positive");
    double t = 2.0 / static_cast<double>(times.n);
    if (t > u) return times.n;  // capped by the truncation level
    int best = times.n;
    for (int m = times.n - 1; m >= 1; --m) {
        t += times.span(m + 1);
        if (t > u) break;
        best = m;
    }
    return best;
}

// Empirical correlation of the CLT-normalized ancestor counts at lookbacks
// u <= v; the limit value is (u/v)^{3/2}.
inline double bivariate_ancestor_correlation(double u, double v, std::uint64_t reps,
                                             RandomStream& rng, int i_max = 0) {
    require(u > 0.0 && u <= v, "bivariate_ancestor_correlation: need 0 < u <= v");
    if (i_max == 0)
        i_max = std::max(10000, static_cast<int>(std::ceil(20.0 / u)));
    const double sd_u = std::sqrt(2.0 / (3.0 * u));
    const double sd_v = std::sqrt(2.0 / (3.0 * v));
    KahanSum sx, sy, sxx, syy, sxy;
    for (std::uint64_t r = 0; r < reps; ++r) {
        auto times = sample_intercoalescence_times(i_max, rng);
        double x = (ancestor_count(times, u) - 2.0 / u) / sd_u;
        double y = (ancestor_count(times, v) - 2.0 / v) / sd_v;
        sx.add(x);
        sy.add(y);
        sxx.add(x * x);
        syy.add(y * y);
        sxy.add(x * y);
    }
    const double nr = static_cast<double>(reps);
    double mx = sx.value() / nr, my = sy.value() / nr;
    double vx = sxx.value() / nr - mx * mx;
    double vy = syy.value() / nr - my * my;
    double cxy = sxy.value() / nr - mx * my;
    return cxy / std::sqrt(vx * vy);
}

// ---------------------------------------------------------------------------
// Tree length near the top
// ---------------------------------------------------------------------------

struct DeltaIntegral {
    double value = 0.0;
    bool fully_truncated = false;  // u fell entirely inside the truncation span
};

// Uncompensated integral of the ancestor count over lookbacks [0, u]:
// sum over levels of (level count) x (overlap of its span with [0, u]).
// The deterministic truncation span [0, 2/i_max) contributes i_max times its
// overlap and no variance.  Compensation is the caller's business: the
// compensator is deterministic, so variances are unaffected.
inline DeltaIntegral delta_integral(const InterCoalescenceTimes& times, double u) {
    require(u > 0.0, "delta_integral: window must be positive");
    DeltaIntegral out;
    const int i_max = times.n;
    double lower = 0.0;
    double upper = 2.0 / static_cast<double>(i_max);
    KahanSum s;
    s.add(static_cast<double>(i_max) * (std::min(u, upper) - lower));
    if (u <= upper) {
        out.value = s.value();
        out.fully_truncated = true;
        return out;
    }
    lower = upper;
    for (int m = i_max; m >= 2; --m) {
        upper = lower + times.span(m);
        s.add(static_cast<double>(m) * (std::min(u, upper) - lower));
        if (upper >= u) {
            out.value = s.value();
            return out;
        }
        lower = upper;
    }
    s.add(u - lower);  // one line remains beyond the root
    out.value = s.value();
    return out;
}

}  // namespace evocoal
