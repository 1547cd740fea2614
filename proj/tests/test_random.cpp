#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <vector>

#include "evocoal/numeric.hpp"
#include "evocoal/random.hpp"

using namespace evocoal;

TEST_CASE("random: substreams are reproducible and purpose-separated") {
    RandomStream a(42, "alpha", 3);
    RandomStream b(42, "alpha", 3);
    RandomStream c(42, "beta", 3);
    RandomStream d(42, "alpha", 4);
    bool same = true, diff_purpose = false, diff_index = false;
    for (int k = 0; k < 64; ++k) {
        auto va = a.next_u64();
        same = same && (va == b.next_u64());
        diff_purpose = diff_purpose || (va != c.next_u64());
        diff_index = diff_index || (va != d.next_u64());
    }
    CHECK(same);
    CHECK(diff_purpose);
    CHECK(diff_index);
}

TEST_CASE("random: uniform01 stays inside (0, 1]") {
    RandomStream rng(7, "u01");
    for (int k = 0; k < 100000; ++k) {
        double u = rng.uniform01();
        REQUIRE(u > 0.0);
        REQUIRE(u <= 1.0);
    }
}

TEST_CASE("random: exponential matches its first two moments") {
    RandomStream rng(11, "exp");
    const double rate = 3.0;
    KahanSum s, s2;
    const int reps = 200000;
    for (int k = 0; k < reps; ++k) {
        double x = rng.exponential(rate);
        s.add(x);
        s2.add(x * x);
    }
    double mean = s.value() / reps;
    double var = s2.value() / reps - mean * mean;
    CHECK(mean == Catch::Approx(1.0 / rate).margin(4.0 / (rate * std::sqrt(double(reps)))));
    CHECK(var == Catch::Approx(1.0 / (rate * rate)).epsilon(0.05));
}

TEST_CASE("random: ordered pairs are uniform over n(n-1) choices") {
    RandomStream rng(13, "pairs");
    const int n = 5;
    const int reps = 100000;
    std::vector<int> counts(n * n, 0);
    for (int k = 0; k < reps; ++k) {
        auto [a, b] = rng.ordered_pair_below(n);
        REQUIRE(a != b);
        REQUIRE(a < static_cast<unsigned>(n));
        REQUIRE(b < static_cast<unsigned>(n));
        ++counts[a * n + b];
    }
    double expected = double(reps) / (n * (n - 1));
    double chi2 = 0.0;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            if (a != b) {
                double d = counts[a * n + b] - expected;
                chi2 += d * d / expected;
            }
    // 19 dof; 0.999 quantile is ~43.8
    CHECK(chi2 < 43.8);
}

TEST_CASE("numeric: harmonic sums agree with asymptotics") {
    CHECK(harmonic(1) == 1.0);
    CHECK(harmonic(4) == Catch::Approx(1.0 + 0.5 + 1.0 / 3.0 + 0.25).epsilon(1e-15));
    // H_n - log n -> gamma
    double n = 1e7;
    CHECK(harmonic(10000000) - std::log(n) ==
          Catch::Approx(euler_gamma).margin(1e-7));
    // sum 1/i^2 -> pi^2/6
    CHECK(harmonic2(10000000) == Catch::Approx(1.6449340668482264).margin(1e-6));
}

TEST_CASE("numeric: log_choose on small exact values") {
    CHECK(std::exp(log_choose(5, 2)) == Catch::Approx(10.0).epsilon(1e-12));
    CHECK(std::exp(log_choose(10, 0)) == Catch::Approx(1.0).epsilon(1e-12));
    CHECK(log_choose(3, 4) == -INFINITY);
}
