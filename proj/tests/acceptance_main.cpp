// Acceptance battery runner: one line per criterion, nonzero exit on any
// failure.  Same engine as `evocoal verify`.
#include <cstdint>
#include <cstring>
#include <iostream>
#include <string>

#include "evocoal/verify.hpp"

int main(int argc, char** argv) {
    std::uint64_t seed = 42;
    std::string out_dir = ".";
    unsigned threads = 0;
    int only = 0;
    for (int a = 1; a < argc; ++a) {
        if (std::strcmp(argv[a], "--seed") == 0 && a + 1 < argc)
            seed = std::strtoull(argv[++a], nullptr, 10);
        else if (std::strcmp(argv[a], "--out") == 0 && a + 1 < argc)
            out_dir = argv[++a];
        else if (std::strcmp(argv[a], "--threads") == 0 && a + 1 < argc)
            threads = static_cast<unsigned>(std::strtoul(argv[++a], nullptr, 10));
        else if (std::strcmp(argv[a], "--criterion") == 0 && a + 1 < argc)
            only = std::atoi(argv[++a]);
        else {
            std::cerr << "usage: acceptance [--seed S] [--out DIR] [--threads T] "
                         "[--criterion K]\n";
            return 2;
        }
    }
    auto results = evocoal::run_verification(seed, out_dir, threads, std::cout, only);
    int failed = 0;
    for (const auto& r : results)
        if (!r.pass) ++failed;
    std::cout << results.size() - failed << "/" << results.size()
              << " acceptance criteria passed (seed " << seed << ")\n";
    return failed == 0 ? 0 : 1;
}
