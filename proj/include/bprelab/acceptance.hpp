#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace bprelab {

// One acceptance criterion: a named end-to-end check with a pinned budget,
// tolerance, and wall-clock limit. Everything required for a pass is fixed
// here in code; nothing is deferred to later calibration.
struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    bool checks_ok = false;   // pass without the runtime limit
    double seconds = 0.0;
    double limit_seconds = 0.0;
    std::vector<std::string> detail;
};

struct AcceptanceOptions {
    int threads = 0;               // 0: BPRE_LAB_THREADS or hardware
    std::uint64_t seed = 20260811; // master seed for every stochastic criterion
};

inline constexpr int kCriteriaCount = 11;

CriterionResult run_criterion(int id, const AcceptanceOptions& opts);

// empty ids runs 1..kCriteriaCount
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opts,
                                            const std::vector<int>& ids = {});

std::string format_result(const CriterionResult& r);

}  // namespace bprelab
