// =============================================================================
// coalescent_tree.hpp — Ultrametric genealogy of n leaves.
//
// Node ids: leaves 1..n, internal nodes n+1..2n-1 in merge order (newest
// merger first, root last).  Times are ages: leaves sit at age 0 (the
// present), mergers at strictly increasing ages toward the root.
// =============================================================================
#pragma once

#include <vector>

#include "evocoal/numeric.hpp"
#include "evocoal/random.hpp"

namespace evocoal {

// Inter-coalescence spans of a coalescent genealogy.  x[k] is the duration
// with k lines, k = 2..n; entries below index 2 are unused.
struct InterCoalescenceTimes {
    int n = 0;
    std::vector<double> x;

    double span(int k) const { return x[static_cast<std::size_t>(k)]; }
};

inline InterCoalescenceTimes sample_intercoalescence_times(int n, RandomStream& rng) {
    require(n >= 2, "sample_intercoalescence_times: population size must be >= 2");
    InterCoalescenceTimes t;
    t.n = n;
    t.x.assign(static_cast<std::size_t>(n) + 1, 0.0);
    for (int k = 2; k <= n; ++k) {
        double rate = choose2(k);
        double v;
        do {
            v = rng.exponential(rate);
        } while (v <= 0.0);
        t.x[static_cast<std::size_t>(k)] = v;
    }
    return t;
}

// Total branch length: sum_k k * x[k].
inline double tree_length(const InterCoalescenceTimes& t) {
    KahanSum s;
    for (int k = 2; k <= t.n; ++k) s.add(static_cast<double>(k) * t.span(k));
    return s.value();
}

struct Merger {
    double time;  // age of the coalescence
    int child_a;
    int child_b;
    int parent;
};

class CoalescentTree {
public:
    int n = 0;
    std::vector<Merger> mergers;     // newest first; mergers[n-2] is the root
    std::vector<double> node_times;  // indexed by node id (0 unused)
    std::vector<int> parent;         // 0 for the root

    int root() const { return 2 * n - 1; }
    double depth() const { return node_times[static_cast<std::size_t>(root())]; }
    bool is_leaf(int id) const { return id >= 1 && id <= n; }

    double length() const {
        KahanSum s;
        for (int v = 1; v < root(); ++v) {
            s.add(node_times[static_cast<std::size_t>(parent[static_cast<std::size_t>(v)])] -
                  node_times[static_cast<std::size_t>(v)]);
        }
        return s.value();
    }

    int mrca(int i, int j) const {
        while (i != j) {
            if (node_times[static_cast<std::size_t>(i)] <
                node_times[static_cast<std::size_t>(j)])
                i = parent[static_cast<std::size_t>(i)];
            else
                j = parent[static_cast<std::size_t>(j)];
        }
        return i;
    }
};

// Build a tree from given spans: the unordered merging pair at each step is
// uniform among the remaining lines.  Exact age ties are resolved by
// resampling the offending span, which keeps merger ages strictly increasing.
inline CoalescentTree sample_topology(const InterCoalescenceTimes& times,
                                      RandomStream& rng) {
    const int n = times.n;
    require(n >= 2, "sample_topology: population size must be >= 2");
    CoalescentTree tree;
    tree.n = n;
    tree.mergers.reserve(static_cast<std::size_t>(n) - 1);
    tree.node_times.assign(2 * static_cast<std::size_t>(n), 0.0);
    tree.parent.assign(2 * static_cast<std::size_t>(n), 0);

    std::vector<int> active(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) active[static_cast<std::size_t>(i)] = i + 1;

    double age = 0.0;
    int next_id = n + 1;
    for (int k = n; k >= 2; --k) {
        double span = times.span(k);
        while (age + span == age) span = rng.exponential(choose2(k));
        age += span;

        auto [ia, ib] = rng.ordered_pair_below(static_cast<std::uint32_t>(k));
        int a = active[ia];
        int b = active[ib];
        tree.mergers.push_back({age, a, b, next_id});
        tree.node_times[static_cast<std::size_t>(next_id)] = age;
        tree.parent[static_cast<std::size_t>(a)] = next_id;
        tree.parent[static_cast<std::size_t>(b)] = next_id;
        // swap-remove the two children, insert the parent
        if (ia > ib) std::swap(ia, ib);
        active[ib] = active[static_cast<std::size_t>(k) - 1];
        active[ia] = next_id;
        active.pop_back();
        ++next_id;
    }
    return tree;
}

inline CoalescentTree sample_topology(int n, RandomStream& rng) {
    return sample_topology(sample_intercoalescence_times(n, rng), rng);
}

// R(i, j) = 2 * age of the most recent common ancestor.
inline double metric_r(const CoalescentTree& tree, int i, int j) {
    require(tree.is_leaf(i) && tree.is_leaf(j), "metric_r: unknown leaf");
    require(i != j, "metric_r: leaves must differ");
    return 2.0 * tree.node_times[static_cast<std::size_t>(tree.mrca(i, j))];
}

// Tree induced on a subset of leaves, with degree-2 nodes suppressed and
// leaves relabeled 1..m in the order given.  Merger ages are inherited.
inline CoalescentTree restrict_to_leaves(const CoalescentTree& tree,
                                         const std::vector<int>& leaves) {
    const int m = static_cast<int>(leaves.size());
    require(m >= 2, "restrict_to_leaves: need at least two leaves");
    CoalescentTree out;
    out.n = m;
    out.node_times.assign(2 * static_cast<std::size_t>(m), 0.0);
    out.parent.assign(2 * static_cast<std::size_t>(m), 0);
    out.mergers.reserve(static_cast<std::size_t>(m) - 1);

    // rep[v]: restricted node id carried by the cluster rooted at v, or 0.
    std::vector<int> rep(2 * static_cast<std::size_t>(tree.n), 0);
    for (int i = 0; i < m; ++i) {
        require(tree.is_leaf(leaves[static_cast<std::size_t>(i)]),
                "restrict_to_leaves: unknown leaf");
        rep[static_cast<std::size_t>(leaves[static_cast<std::size_t>(i)])] = i + 1;
    }
    int next_id = m + 1;
    for (const Merger& mg : tree.mergers) {  // ascending age by construction
        int ra = rep[static_cast<std::size_t>(mg.child_a)];
        int rb = rep[static_cast<std::size_t>(mg.child_b)];
        if (ra > 0 && rb > 0) {
            out.mergers.push_back({mg.time, ra, rb, next_id});
            out.node_times[static_cast<std::size_t>(next_id)] = mg.time;
            out.parent[static_cast<std::size_t>(ra)] = next_id;
            out.parent[static_cast<std::size_t>(rb)] = next_id;
            rep[static_cast<std::size_t>(mg.parent)] = next_id;
            ++next_id;
        } else if (ra > 0 || rb > 0) {
            rep[static_cast<std::size_t>(mg.parent)] = ra + rb;
        }
    }
    return out;
}

}  // namespace evocoal
