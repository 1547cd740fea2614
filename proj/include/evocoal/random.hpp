// =============================================================================
// random.hpp — Deterministic random streams with named substreams.
//
// A 64-bit master seed expands into independent substreams keyed by
// (purpose string, replicate index).  The expansion is a splitmix64 hash
// chain, so a given (seed, purpose, index) triple always yields the same
// stream regardless of thread schedule or call order.
//
// Samplers are hand-rolled on top of the raw 64-bit output so that the
// produced sequences depend only on this file, not on the standard
// library's unspecified distribution algorithms.
// =============================================================================
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace evocoal {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// FNV-1a over the purpose string, then mixed with the seed and index.
inline std::uint64_t substream_seed(std::uint64_t master_seed,
                                    std::string_view purpose,
                                    std::uint64_t index = 0) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : purpose) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::uint64_t s = master_seed;
    std::uint64_t a = splitmix64(s);
    s ^= h;
    std::uint64_t b = splitmix64(s);
    s ^= index * 0x9e3779b97f4a7c15ULL;
    std::uint64_t c = splitmix64(s);
    return a ^ (b << 1) ^ c;
}

// One stream of randomness.  All simulation code draws through this class.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(make_seeded(seed)) {}

    RandomStream(std::uint64_t master_seed, std::string_view purpose,
                 std::uint64_t index = 0)
        : RandomStream(substream_seed(master_seed, purpose, index)) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on (0, 1]: never returns 0, safe under log().
    double uniform01() {
        std::uint64_t bits = engine_() >> 11;  // top 53 bits
        return (static_cast<double>(bits) + 1.0) * 0x1.0p-53;
    }

    // Uniform on [0, 1).
    double uniform01_halfopen() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double exponential(double rate) { return -std::log(uniform01()) / rate; }

    // Uniform integer in [0, n), unbiased via rejection.
    std::uint64_t uniform_below(std::uint64_t n) {
        std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
        for (;;) {
            std::uint64_t r = engine_();
            if (r >= threshold) return r % n;
        }
    }

    // Ordered pair of distinct indices in [0, n), uniform over n(n-1) choices.
    std::pair<std::uint32_t, std::uint32_t> ordered_pair_below(std::uint32_t n) {
        std::uint32_t a = static_cast<std::uint32_t>(uniform_below(n));
        std::uint32_t b = static_cast<std::uint32_t>(uniform_below(n - 1));
        if (b >= a) ++b;
        return {a, b};
    }

    double normal() {
        // Box-Muller; one value per call keeps the stream stateless.
        double u = uniform01();
        double v = uniform01_halfopen();
        return std::sqrt(-2.0 * std::log(u)) * std::cos(6.283185307179586477 * v);
    }

    // Index into a discrete distribution given by non-normalized weights.
    std::size_t discrete(const std::vector<double>& weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        double u = uniform01_halfopen() * total;
        double acc = 0.0;
        for (std::size_t k = 0; k + 1 < weights.size(); ++k) {
            acc += weights[k];
            if (u < acc) return k;
        }
        return weights.empty() ? 0 : weights.size() - 1;
    }

private:
    static std::mt19937_64 make_seeded(std::uint64_t seed) {
        // Warm the 19937-bit state from a splitmix chain; a bare 64-bit seed
        // would leave most of the state zero-heavy for the first draws.
        std::uint64_t s = seed;
        std::seed_seq seq{splitmix64(s), splitmix64(s), splitmix64(s),
                          splitmix64(s), splitmix64(s), splitmix64(s)};
        return std::mt19937_64(seq);
    }

    std::mt19937_64 engine_;
};

}  // namespace evocoal
