// Acceptance runner: one pass/fail line per criterion. Used both by ctest
// (one invocation per criterion) and directly.

#include "bprelab/acceptance.hpp"

#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

int main(int argc, char** argv) {
    bprelab::AcceptanceOptions opts;
    std::vector<int> ids;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--criterion" && i + 1 < argc) {
            ids.push_back(std::atoi(argv[++i]));
        } else if (arg == "--threads" && i + 1 < argc) {
            opts.threads = std::atoi(argv[++i]);
        } else if (arg == "--seed" && i + 1 < argc) {
            opts.seed = std::strtoull(argv[++i], nullptr, 10);
        } else {
            std::fprintf(stderr, "usage: %s [--criterion N]... [--threads N] [--seed U64]\n", argv[0]);
            return 2;
        }
    }
    const auto results = bprelab::run_acceptance(opts, ids);
    bool all_pass = true;
    for (const auto& r : results) {
        std::printf("%s\n", bprelab::format_result(r).c_str());
        for (const auto& d : r.detail) std::printf("    %s\n", d.c_str());
        all_pass = all_pass && r.pass;
    }
    return all_pass ? 0 : 1;
}
