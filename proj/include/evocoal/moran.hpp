// =============================================================================
// moran.hpp — Event-driven Moran model with incremental genealogy.
//
// The current population's genealogy lives in a fixed arena: leaf slots
// 1..n never move, internal slots n+1..2n-1 are always all live because
// every event suppresses exactly one internal node and creates exactly one
// (the suppressed slot is reused).  Each resampling event costs O(1):
//
//   * all external branches grow by the waiting time (length += n * dt),
//   * the dier's external branch is cut (the jump of the length process),
//   * if the dier hung off the root, the segment from the old root down to
//     the new root is cut as well (the MRCA changes),
//   * the reproducer's branch is split at the event time; the newborn
//     starts with a zero-length external branch.
//
// Correctness of the incremental length is guarded by the differential
// test against full recomputation.
// =============================================================================
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "evocoal/coalescent_tree.hpp"
#include "evocoal/kingman.hpp"
#include "evocoal/numeric.hpp"
#include "evocoal/random.hpp"
#include "evocoal/stats.hpp"

namespace evocoal {

struct ResamplingEvent {
    double time = 0.0;
    int dier = 0;        // individual 1..n; its slot becomes the newborn
    int reproducer = 0;  // individual 1..n, != dier
};

struct ApplyResult {
    double external_branch = 0.0;  // the dier's external branch (the J statistic)
    double stub = 0.0;             // old-root..new-root segment, 0 unless MRCA changed
    double old_part = 0.0;         // removed length lying below the decomposition origin
    bool mrca_change = false;

    double drop() const { return external_branch + stub; }
};

// Sizes of the f oldest families plus the extinction clock D^{N,f}.
// Family labels are assigned by a random permutation at every rebuild so
// that the indexed size vector has the exchangeable stationary law.
struct FamilyState {
    int f = 0;
    std::vector<int> sizes;             // index 1..f
    std::vector<int> member;            // individual -> family index
    std::vector<double> extinction_log;
    RandomStream rng{0};
};

class MoranState {
public:
    MoranState(const CoalescentTree& tree, double clock)
        : n_(tree.n),
          clock_(clock),
          nodes_(2 * static_cast<std::size_t>(tree.n)),
          root_(tree.root()),
          decomp_origin_(clock) {
        for (int v = 1; v <= 2 * n_ - 1; ++v) {
            Node& nd = nodes_[static_cast<std::size_t>(v)];
            nd.parent = v == root_ ? 0 : tree.parent[static_cast<std::size_t>(v)];
            nd.child[0] = nd.child[1] = 0;
            nd.time = clock - tree.node_times[static_cast<std::size_t>(v)];
        }
        for (const Merger& m : tree.mergers) {
            nodes_[static_cast<std::size_t>(m.parent)].child[0] = m.child_a;
            nodes_[static_cast<std::size_t>(m.parent)].child[1] = m.child_b;
        }
        cached_length_ = recompute_length();
    }

    static MoranState equilibrium(int n, RandomStream& rng) {
        // A stationary start: the time-0 genealogy of a Moran model run from
        // the infinite past is a Kingman n-coalescent.
        return MoranState(sample_topology(n, rng), 0.0);
    }

    int size() const { return n_; }
    double clock() const { return clock_; }
    double length() const { return cached_length_; }
    double compensated_length() const {
        return cached_length_ - 2.0 * std::log(static_cast<double>(n_));
    }
    int root() const { return root_; }
    bool is_leaf(int v) const { return v >= 1 && v <= n_; }

    ResamplingEvent next_event(RandomStream& rng) {
        ResamplingEvent ev;
        ev.time = clock_ + rng.exponential(choose2(n_));
        auto [d, r] = rng.ordered_pair_below(static_cast<std::uint32_t>(n_));
        ev.dier = static_cast<int>(d) + 1;
        ev.reproducer = static_cast<int>(r) + 1;
        return ev;
    }

    // Deterministic growth up to t with no event.  Needed when a recording
    // window closes: the discarded beyond-horizon waiting time must be
    // replaced by a fresh draw from the horizon (memorylessness), not from
    // the last event time.
    void advance_to(double t) {
        require(t >= clock_, "advance_to: time runs forward");
        cached_length_ += static_cast<double>(n_) * (t - clock_);
        clock_ = t;
    }

    ApplyResult apply_event(const ResamplingEvent& ev) {
        require(ev.time > clock_, "apply_event: out-of-order event");
        const double tau = ev.time;
        cached_length_ += static_cast<double>(n_) * (tau - clock_);
        clock_ = tau;

        ApplyResult res;
        const int d = ev.dier;  // leaf slot == individual id
        const int p = nodes_[static_cast<std::size_t>(d)].parent;
        Node& pn = nodes_[static_cast<std::size_t>(p)];
        const int s = pn.child[0] == d ? pn.child[1] : pn.child[0];

        res.external_branch = tau - pn.time;
        res.old_part += overlap_below_origin(pn.time, tau);
        cached_length_ -= res.external_branch;

        if (p == root_) {
            // The dier was the last member of one of the two oldest
            // families; the tree re-roots at the sibling subtree.
            const double s_pos = is_leaf(s) ? tau : nodes_[static_cast<std::size_t>(s)].time;
            res.stub = s_pos - pn.time;
            res.old_part += overlap_below_origin(pn.time, s_pos);
            cached_length_ -= res.stub;
            res.mrca_change = true;
            nodes_[static_cast<std::size_t>(s)].parent = 0;
            root_ = s;
        } else {
            const int gp = pn.parent;
            Node& gpn = nodes_[static_cast<std::size_t>(gp)];
            (gpn.child[0] == p ? gpn.child[0] : gpn.child[1]) = s;
            nodes_[static_cast<std::size_t>(s)].parent = gp;
        }

        // Split the reproducer's branch at tau; the suppressed slot p is
        // reused for the new internal node, so the arena stays dense.
        const int r = ev.reproducer;
        const int pr = nodes_[static_cast<std::size_t>(r)].parent;
        Node& qn = nodes_[static_cast<std::size_t>(p)];
        qn.time = tau;
        qn.child[0] = r;
        qn.child[1] = d;
        qn.parent = (r == root_) ? 0 : pr;
        if (r == root_) {
            root_ = p;
        } else {
            Node& prn = nodes_[static_cast<std::size_t>(pr)];
            (prn.child[0] == r ? prn.child[0] : prn.child[1]) = p;
        }
        nodes_[static_cast<std::size_t>(r)].parent = p;
        nodes_[static_cast<std::size_t>(d)].parent = p;

        removed_old_ += res.old_part;
        removed_new_ += res.drop() - res.old_part;
        if (family_) on_event_family(ev, res);
        return res;
    }

    double recompute_length() const {
        KahanSum s;
        for (int v = 1; v <= 2 * n_ - 1; ++v) {
            if (v == root_) continue;
            const Node& nd = nodes_[static_cast<std::size_t>(v)];
            double lo = nodes_[static_cast<std::size_t>(nd.parent)].time;
            double hi = is_leaf(v) ? clock_ : nd.time;
            s.add(hi - lo);
        }
        return s.value();
    }

    // Sorted internal node times, oldest first.  Two snapshots of this
    // vector determine the window statistic below.
    std::vector<double> snapshot_merger_times() const {
        std::vector<double> t;
        t.reserve(static_cast<std::size_t>(n_) - 1);
        for (int v = n_ + 1; v <= 2 * n_ - 1; ++v)
            t.push_back(nodes_[static_cast<std::size_t>(v)].time);
        std::sort(t.begin(), t.end());
        return t;
    }

    // Number of lines extant at the moment the individual's external branch
    // attaches to the tree: 1 + number of strictly older internal nodes.
    int external_attach_rank(int individual) const {
        const double pt =
            nodes_[static_cast<std::size_t>(nodes_[static_cast<std::size_t>(individual)].parent)]
                .time;
        int rank = 1;
        for (int v = n_ + 1; v <= 2 * n_ - 1; ++v)
            if (nodes_[static_cast<std::size_t>(v)].time < pt) ++rank;
        return rank;
    }

    // --- A/B decomposition -------------------------------------------------
    // Everything in the current tree above the origin is gained length,
    // everything removed from below the origin is lost time-0 length.

    void reset_decomposition() {
        decomp_origin_ = clock_;
        removed_old_ = removed_new_ = 0.0;
    }
    double gained_length() const {
        return static_cast<double>(n_) * (clock_ - decomp_origin_) - removed_new_;
    }
    double lost_length() const { return removed_old_; }

    // --- family overlay ----------------------------------------------------

    void track_families(int f, std::uint64_t seed) {
        require(f >= 2 && f <= n_, "track_families: need 2 <= f <= n");
        family_.emplace();
        family_->f = f;
        family_->rng = RandomStream(seed, "family-labels");
        family_->member.assign(static_cast<std::size_t>(n_) + 1, 0);
        rebuild_families();
    }

    const FamilyState& family() const { return *family_; }
    bool has_families() const { return family_.has_value(); }
    std::vector<double> take_extinction_log() {
        std::vector<double> out;
        out.swap(family_->extinction_log);
        return out;
    }

    // Recut the genealogy at its f-line level: the family roots are the
    // children of the f-1 oldest internal nodes that are not themselves
    // among those nodes.  Labels 1..f are assigned uniformly at random.
    void rebuild_families() {
        FamilyState& fam = *family_;
        const int f = fam.f;
        std::vector<int> internal(static_cast<std::size_t>(n_) - 1);
        for (int v = n_ + 1; v <= 2 * n_ - 1; ++v)
            internal[static_cast<std::size_t>(v - n_ - 1)] = v;
        std::sort(internal.begin(), internal.end(), [this](int a, int b) {
            return nodes_[static_cast<std::size_t>(a)].time <
                   nodes_[static_cast<std::size_t>(b)].time;
        });
        std::vector<bool> cut(2 * static_cast<std::size_t>(n_), false);
        for (int k = 0; k < f - 1; ++k) cut[static_cast<std::size_t>(internal[static_cast<std::size_t>(k)])] = true;

        std::vector<int> roots;
        roots.reserve(static_cast<std::size_t>(f));
        for (int k = 0; k < f - 1; ++k) {
            const Node& nd = nodes_[static_cast<std::size_t>(internal[static_cast<std::size_t>(k)])];
            for (int c : nd.child)
                if (!cut[static_cast<std::size_t>(c)]) roots.push_back(c);
        }

        // random labels
        std::vector<int> label(roots.size());
        for (std::size_t k = 0; k < label.size(); ++k) label[k] = static_cast<int>(k) + 1;
        for (std::size_t k = label.size(); k > 1; --k)
            std::swap(label[k - 1], label[fam.rng.uniform_below(k)]);

        fam.sizes.assign(static_cast<std::size_t>(f) + 1, 0);
        std::vector<int> stack;
        for (std::size_t ri = 0; ri < roots.size(); ++ri) {
            const int lab = label[ri];
            stack.push_back(roots[ri]);
            while (!stack.empty()) {
                int v = stack.back();
                stack.pop_back();
                if (is_leaf(v)) {
                    fam.member[static_cast<std::size_t>(v)] = lab;
                    ++fam.sizes[static_cast<std::size_t>(lab)];
                } else {
                    stack.push_back(nodes_[static_cast<std::size_t>(v)].child[0]);
                    stack.push_back(nodes_[static_cast<std::size_t>(v)].child[1]);
                }
            }
        }
    }

    // --- structural validation (used by tests) -----------------------------

    bool validate() const {
        int seen = 0;
        for (int v = 1; v <= 2 * n_ - 1; ++v) {
            const Node& nd = nodes_[static_cast<std::size_t>(v)];
            if (is_leaf(v)) {
                if (nd.child[0] != 0 || nd.child[1] != 0) return false;
            } else {
                ++seen;
                for (int c : nd.child) {
                    if (c < 1 || c > 2 * n_ - 1) return false;
                    if (nodes_[static_cast<std::size_t>(c)].parent != v) return false;
                    // zero-length external branches are legal right at an
                    // event; internal merger times are strictly ordered
                    double cpos = is_leaf(c) ? clock_ : nodes_[static_cast<std::size_t>(c)].time;
                    if (is_leaf(c) ? !(cpos >= nd.time) : !(cpos > nd.time)) return false;
                }
            }
            if (v != root_) {
                int p = nd.parent;
                if (p < n_ + 1 || p > 2 * n_ - 1) return false;
            }
        }
        if (seen != n_ - 1) return false;
        return nodes_[static_cast<std::size_t>(root_)].parent == 0;
    }

    double node_time(int v) const { return nodes_[static_cast<std::size_t>(v)].time; }
    int node_parent(int v) const { return nodes_[static_cast<std::size_t>(v)].parent; }

private:
    struct Node {
        int parent = 0;
        int child[2] = {0, 0};  // 0,0 for leaves
        double time = 0.0;      // creation time of internal nodes
    };

    double overlap_below_origin(double lo, double hi) const {
        return std::max(0.0, std::min(hi, decomp_origin_) - lo);
    }

    void on_event_family(const ResamplingEvent& ev, const ApplyResult&) {
        FamilyState& fam = *family_;
        const int fd = fam.member[static_cast<std::size_t>(ev.dier)];
        const int fr = fam.member[static_cast<std::size_t>(ev.reproducer)];
        --fam.sizes[static_cast<std::size_t>(fd)];
        ++fam.sizes[static_cast<std::size_t>(fr)];
        fam.member[static_cast<std::size_t>(ev.dier)] = fr;  // newborn joins the parent's family
        if (fam.sizes[static_cast<std::size_t>(fd)] == 0) {
            fam.extinction_log.push_back(clock_);
            rebuild_families();
        }
    }

    int n_;
    double clock_;
    double cached_length_ = 0.0;
    std::vector<Node> nodes_;
    int root_;
    double decomp_origin_;
    double removed_old_ = 0.0;
    double removed_new_ = 0.0;
    std::optional<FamilyState> family_;
};

// ---------------------------------------------------------------------------
// Length path recording
// ---------------------------------------------------------------------------

struct PathJump {
    double time = 0.0;
    double size = 0.0;      // total downward jump of the length value
    double old_part = 0.0;  // portion of the drop below the window origin
    bool mrca_change = false;
};

// Cadlag record of the tree length over a window: linear growth at rate n
// between events, timestamped downward jumps at events.
struct LengthPath {
    int n = 0;
    double t0 = 0.0;
    double t1 = 0.0;
    double base = 0.0;  // uncompensated value at t0
    std::vector<PathJump> jumps;

    double compensation() const { return 2.0 * std::log(static_cast<double>(n)); }

    double value(double t) const {  // right-continuous
        double v = base + static_cast<double>(n) * (t - t0);
        for (const PathJump& j : jumps) {
            if (j.time > t) break;
            v -= j.size;
        }
        return v;
    }
    double compensated(double t) const { return value(t) - compensation(); }
};

struct PathOptions {
    int family_f = 0;            // 0: overlay off
    std::uint64_t family_seed = 0;
};

inline LengthPath record_path(MoranState& state, double t_end, RandomStream& rng,
                              LengthPath path = {}) {
    path.n = state.size();
    path.t0 = state.clock();
    path.t1 = t_end;
    path.base = state.length();
    for (;;) {
        ResamplingEvent ev = state.next_event(rng);
        if (ev.time > t_end) break;
        ApplyResult res = state.apply_event(ev);
        path.jumps.push_back({ev.time, res.drop(), res.old_part, res.mrca_change});
    }
    state.advance_to(t_end);
    return path;
}

inline LengthPath simulate_path(int n, double t_end, RandomStream& rng,
                                const PathOptions& opt = {}) {
    require(t_end > 0.0, "simulate_path: t_end must be positive");
    MoranState state = MoranState::equilibrium(n, rng);
    if (opt.family_f > 0) state.track_families(opt.family_f, opt.family_seed);
    return record_path(state, t_end, rng);
}

// ---------------------------------------------------------------------------
// A/B decomposition of a recorded path
// ---------------------------------------------------------------------------

// Gained/lost length between the path origin and time t, from the per-jump
// old/new split.  The identity value(t) - base == gain - loss holds exactly;
// tests close the loop against a from-scratch recomputation of value(t).
inline std::pair<double, double> decompose_ab(const LengthPath& path, double t) {
    require(t >= path.t0 && t <= path.t1, "decompose_ab: t outside the window");
    double removed_new = 0.0, removed_old = 0.0;
    for (const PathJump& j : path.jumps) {
        if (j.time > t) break;
        removed_old += j.old_part;
        removed_new += j.size - j.old_part;
    }
    double gain = static_cast<double>(path.n) * (t - path.t0) - removed_new;
    return {gain, removed_old};
}

// ---------------------------------------------------------------------------
// External branch law oracles
// ---------------------------------------------------------------------------

// P[F^N = f] = 2f / (N(N-1)): the number of lines extant when a randomly
// chosen external branch attaches.
inline double external_branch_pmf_f(int n, int f) {
    require(n >= 2, "external_branch_pmf_f: population size must be >= 2");
    require(f >= 1 && f <= n - 1, "external_branch_pmf_f: invalid argument");
    return 2.0 * static_cast<double>(f) /
           (static_cast<double>(n) * (static_cast<double>(n) - 1.0));
}

inline std::pair<double, double> external_branch_moments(int n) {
    require(n >= 2, "external_branch_moments: population size must be >= 2");
    const double dn = n;
    double mean = 2.0 / dn;
    double var = (8.0 * harmonic(static_cast<std::uint64_t>(n)) - 12.0 + 4.0 / dn) /
                 (dn * (dn - 1.0));
    return {mean, var};
}

// CDF of the limiting rescaled jump law N*J: integral of the density
// 8/(2+x)^3 from 0, which closes to 1 - 4/(2+x)^2.
inline double external_branch_limit_cdf(double x) {
    if (x <= 0.0) return 0.0;
    return 1.0 - 4.0 / ((2.0 + x) * (2.0 + x));
}

// ---------------------------------------------------------------------------
// Window statistic
// ---------------------------------------------------------------------------

// Index of the oldest merger whose time differs between two snapshots of
// the same population, or n+1 if the genealogy's merger set is untouched.
// {F >= f} is then exactly the event that the f-1 oldest mergers survived,
// i.e. that none of the f oldest families got extinct in the window.
inline int window_statistic_f(const std::vector<double>& merger_times_a,
                              const std::vector<double>& merger_times_b) {
    require(merger_times_a.size() == merger_times_b.size(),
            "window_statistic_f: snapshot size mismatch");
    for (std::size_t k = 0; k < merger_times_a.size(); ++k)
        if (merger_times_a[k] != merger_times_b[k]) return static_cast<int>(k) + 1;
    return static_cast<int>(merger_times_a.size()) + 2;  // n + 1
}

// ---------------------------------------------------------------------------
// Infinitesimal variance
// ---------------------------------------------------------------------------

// Estimates V[L(t) - L(0)] / (4 t |log t|) over independent stationary
// replicates, with a bootstrap interval on the ratio.
inline StatReport infinitesimal_variance_ratio(int n, double t, std::uint64_t reps,
                                               std::uint64_t seed) {
    require(t > 0.0 && t < 1.0, "infinitesimal_variance_ratio: need 0 < t < 1");
    McEstimator increments(8192);
    for (std::uint64_t rep = 0; rep < reps; ++rep) {
        RandomStream rng(seed, "inf-var", rep);
        MoranState state = MoranState::equilibrium(n, rng);
        const double l0 = state.length();
        for (;;) {
            ResamplingEvent ev = state.next_event(rng);
            if (ev.time > t) break;
            state.apply_event(ev);
        }
        state.advance_to(t);
        increments.add(state.length() - l0);
    }
    const double denom = 4.0 * t * std::abs(std::log(t));

    StatReport r;
    r.estimate = increments.variance() / denom;
    // percentile bootstrap of the variance ratio over the reservoir
    {
        RandomStream rng(seed, "inf-var-boot");
        const auto& res = increments.reservoir();
        const std::size_t m = res.size();
        std::vector<double> boots(1000);
        for (auto& b : boots) {
            double s = 0.0, s2 = 0.0;
            for (std::size_t k = 0; k < m; ++k) {
                double x = res[rng.uniform_below(m)];
                s += x;
                s2 += x * x;
            }
            double mv = s / static_cast<double>(m);
            b = ((s2 - static_cast<double>(m) * mv * mv) / (static_cast<double>(m) - 1.0)) / denom;
        }
        std::sort(boots.begin(), boots.end());
        r.ci_low = boots[25];
        r.ci_high = boots[974];
    }
    r.provenance.seed = seed;
    r.provenance.replicates = reps;
    return r;
}

}  // namespace evocoal
