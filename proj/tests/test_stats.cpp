#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "evocoal/random.hpp"
#include "evocoal/stats.hpp"

using namespace evocoal;

TEST_CASE("gumbel: cdf, quantile and sampling") {
    CHECK(gumbel_cdf(0.0) == Catch::Approx(std::exp(-1.0)).epsilon(1e-14));
    CHECK(gumbel_quantile(std::exp(-1.0)) == Catch::Approx(0.0).margin(1e-14));
    CHECK(gumbel_quantile(gumbel_cdf(1.7)) == Catch::Approx(1.7).epsilon(1e-12));
    CHECK_THROWS(gumbel_quantile(0.0));
    CHECK_THROWS(gumbel_quantile(1.0));

    // Mean of the standard Gumbel is the Euler-Mascheroni constant; cross
    // check the known value by midpoint quadrature of x dF(x).
    double quad = 0.0;
    const int cells = 400000;
    for (int k = 0; k < cells; ++k) {
        double x0 = -8.0 + 28.0 * k / double(cells);
        double x1 = -8.0 + 28.0 * (k + 1) / double(cells);
        quad += 0.5 * (x0 + x1) * (gumbel_cdf(x1) - gumbel_cdf(x0));
    }
    CHECK(quad == Catch::Approx(euler_gamma).margin(1e-6));

    RandomStream rng(5, "gumbel");
    McEstimator est;
    for (int k = 0; k < 1000000; ++k) est.add(gumbel_sample(rng));
    auto rep = est.report(0.01, 5);
    CHECK(rep.ci_low <= euler_gamma);
    CHECK(euler_gamma <= rep.ci_high);
}

TEST_CASE("ks one-sample: calibration at the null") {
    RandomStream rng(17, "ks-calib");
    const double alpha = 0.05;
    int rejections = 0;
    const int trials = 300;
    for (int t = 0; t < trials; ++t) {
        std::vector<double> xs(800);
        for (auto& x : xs) x = rng.uniform01_halfopen();
        auto r = ks_one_sample(xs, [](double v) { return std::clamp(v, 0.0, 1.0); },
                               0.0, alpha);
        if (!r.decision) ++rejections;
    }
    double rate = double(rejections) / trials;
    double band = 3.0 * std::sqrt(alpha * (1 - alpha) / trials);
    CHECK(std::abs(rate - alpha) <= band);
}

TEST_CASE("ks: distinguishes clearly different laws, accepts identical samples") {
    RandomStream rng(19, "ks-power");
    std::vector<double> g(10000);
    for (auto& x : g) x = gumbel_sample(rng);
    auto bad = ks_one_sample(g, [](double v) { return normal_cdf(v); }, 0.0, 0.01);
    CHECK_FALSE(bad.decision);

    auto same = ks_two_sample(g, g, 0.01);
    CHECK(same.test_statistic == 0.0);
    CHECK(same.decision);

    std::vector<double> h(10000);
    for (auto& x : h) x = gumbel_sample(rng);
    CHECK(ks_two_sample(g, h, 0.01).decision);
}

TEST_CASE("chi-square gof: zero statistic on exact proportions, calibration") {
    std::vector<double> counts{30.0, 60.0, 10.0};
    std::vector<double> expected{30.0, 60.0, 10.0};
    auto r = chi_square_gof(counts, expected, 0.01);
    CHECK(r.test_statistic == Catch::Approx(0.0).margin(1e-12));
    CHECK(r.decision);
    CHECK_THROWS(chi_square_gof(counts, {0.0, 0.0, 0.0}));

    RandomStream rng(23, "chi-calib");
    const double alpha = 0.05;
    int rejections = 0;
    const int trials = 300;
    const std::vector<double> probs{0.1, 0.2, 0.3, 0.4};
    for (int t = 0; t < trials; ++t) {
        std::vector<double> c(4, 0.0), e(4);
        const int m = 2000;
        for (int k = 0; k < m; ++k) {
            double u = rng.uniform01_halfopen(), acc = 0.0;
            for (std::size_t b = 0; b < probs.size(); ++b) {
                acc += probs[b];
                if (u < acc || b + 1 == probs.size()) {
                    c[b] += 1.0;
                    break;
                }
            }
        }
        for (std::size_t b = 0; b < probs.size(); ++b) e[b] = m * probs[b];
        if (!chi_square_gof(c, e, alpha).decision) ++rejections;
    }
    double rate = double(rejections) / trials;
    CHECK(std::abs(rate - alpha) <= 3.0 * std::sqrt(alpha * (1 - alpha) / trials));
}

TEST_CASE("poisson check: passes synthetic Poisson, rejects a deterministic grid") {
    RandomStream rng(29, "poisson");
    std::vector<double> times;
    double t = 0.0;
    const double rate = 3.0;
    for (int k = 0; k < 2000; ++k) times.push_back(t += rng.exponential(rate));
    CHECK(poisson_process_check(times, rate, 0.01).decision);

    std::vector<double> grid(2000);
    for (int k = 0; k < 2000; ++k) grid[k] = (k + 1) / rate;
    CHECK_FALSE(poisson_process_check(grid, rate, 0.01).decision);

    CHECK_THROWS(poisson_process_check({1.0, 2.0}, 1.0));
}

TEST_CASE("poisson check: calibration at the null") {
    RandomStream rng(31, "poisson-calib");
    const double alpha = 0.05;
    int rejections = 0;
    const int trials = 250;
    for (int tr = 0; tr < trials; ++tr) {
        std::vector<double> times;
        double t = 0.0;
        for (int k = 0; k < 500; ++k) times.push_back(t += rng.exponential(2.0));
        if (!poisson_process_check(times, 2.0, alpha).decision) ++rejections;
    }
    // The three sub-tests are Bonferroni-combined, so the attained level is
    // at most alpha; only reject-too-often is a defect.
    double rate = double(rejections) / trials;
    CHECK(rate <= alpha + 3.0 * std::sqrt(alpha * (1 - alpha) / trials));
}

TEST_CASE("mc estimator: constants, known law, merge associativity") {
    McEstimator c;
    for (int k = 0; k < 100; ++k) c.add(2.5);
    CHECK(c.mean() == Catch::Approx(2.5).epsilon(1e-15));
    CHECK(c.variance() == Catch::Approx(0.0).margin(1e-15));

    RandomStream rng(37, "mc");
    McEstimator whole, left, right;
    std::vector<double> xs(100000);
    for (auto& x : xs) x = rng.exponential(1.0);
    for (std::size_t k = 0; k < xs.size(); ++k) {
        whole.add(xs[k]);
        (k < xs.size() / 2 ? left : right).add(xs[k]);
    }
    auto rep = whole.report(0.01, 37);
    CHECK(rep.ci_low <= 1.0);
    CHECK(1.0 <= rep.ci_high);
    CHECK(whole.variance() == Catch::Approx(1.0).epsilon(0.05));

    left.merge(right);
    CHECK(left.count() == whole.count());
    CHECK(left.mean() == Catch::Approx(whole.mean()).epsilon(1e-9));
    CHECK(left.variance() == Catch::Approx(whole.variance()).epsilon(1e-9));
}

TEST_CASE("skorokhod approx: identity, symmetry, jump offset, step-vs-flat") {
    auto flat = [](double) { return 0.0; };
    auto stepat = [](double c) {
        return [c](double t) { return t >= c ? 1.0 : 0.0; };
    };
    const double res = 0.01;
    CHECK(skorokhod_distance_approx(flat, flat, 0.0, 1.0, res) == 0.0);

    auto a = stepat(0.50), b = stepat(0.55);
    double dab = skorokhod_distance_approx(a, b, 0.0, 1.0, res);
    double dba = skorokhod_distance_approx(b, a, 0.0, 1.0, res);
    CHECK(dab == Catch::Approx(dba).margin(1e-14));
    CHECK(dab <= 0.05 + res + 1e-12);

    // no warp can remove a jump against a flat path
    CHECK(skorokhod_distance_approx(stepat(0.5), flat, 0.0, 1.0, res) >=
          1.0 - 1e-12);

    // upper bound: the unwarped sup-difference on the grid
    auto lin = [](double t) { return 0.3 * t; };
    CHECK(skorokhod_distance_approx(lin, flat, 0.0, 1.0, res) <= 0.3 + 1e-12);
}

TEST_CASE("skorokhod approx: near-triangle inequality on random step paths") {
    RandomStream rng(41, "sk-tri");
    const double res = 0.02;
    auto random_path = [&rng]() {
        std::vector<double> jt(3), js(3);
        for (int k = 0; k < 3; ++k) {
            jt[k] = rng.uniform01_halfopen();
            js[k] = rng.uniform01_halfopen() * 2.0 - 1.0;
        }
        return [jt, js](double t) {
            double v = 0.0;
            for (int k = 0; k < 3; ++k)
                if (t >= jt[k]) v += js[k];
            return v;
        };
    };
    for (int trial = 0; trial < 40; ++trial) {
        auto a = random_path();
        auto b = random_path();
        auto c = random_path();
        double ab = skorokhod_distance_approx(a, b, 0.0, 1.0, res);
        double bc = skorokhod_distance_approx(b, c, 0.0, 1.0, res);
        double ac = skorokhod_distance_approx(a, c, 0.0, 1.0, res);
        CHECK(ac <= ab + bc + 2.0 * res + 1e-12);
    }
}
