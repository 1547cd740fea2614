// =============================================================================
// parallel.hpp — Replicate-level parallelism with deterministic reduction.
//
// Work splits into a fixed number of contiguous chunks whose layout does
// not depend on the thread count; per-chunk partials merged in chunk order
// therefore reproduce bit-identically on any machine.  Replicates draw
// their randomness from (seed, purpose, replicate-index) substreams, never
// from thread-local state.
// =============================================================================
#pragma once

#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace evocoal {

inline unsigned default_thread_count() {
    if (const char* env = std::getenv("EVOCOAL_THREADS")) {
        int v = std::atoi(env);
        if (v > 0) return static_cast<unsigned>(v);
    }
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    return hw > 16 ? 16 : hw;
}

// work(chunk_index, begin, end) over a fixed 64-chunk partition of
// [0, total).  Chunks must not share mutable state.
inline void run_chunked(std::uint64_t total, unsigned threads,
                        const std::function<void(unsigned, std::uint64_t, std::uint64_t)>& work,
                        unsigned n_chunks = 64) {
    if (total == 0) return;
    if (n_chunks > total) n_chunks = static_cast<unsigned>(total);
    if (threads == 0) threads = default_thread_count();
    if (threads > n_chunks) threads = n_chunks;

    auto chunk_bounds = [total, n_chunks](unsigned c) {
        std::uint64_t q = total / n_chunks, r = total % n_chunks;
        std::uint64_t begin = c * q + (c < r ? c : r);
        std::uint64_t end = begin + q + (c < r ? 1 : 0);
        return std::pair<std::uint64_t, std::uint64_t>(begin, end);
    };

    if (threads <= 1) {
        for (unsigned c = 0; c < n_chunks; ++c) {
            auto [b, e] = chunk_bounds(c);
            work(c, b, e);
        }
        return;
    }

    std::atomic<unsigned> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&]() {
            for (;;) {
                unsigned c = next.fetch_add(1);
                if (c >= n_chunks) return;
                auto [b, e] = chunk_bounds(c);
                work(c, b, e);
            }
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace evocoal
