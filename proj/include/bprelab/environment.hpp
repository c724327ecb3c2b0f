#pragma once

#include "bprelab/numeric.hpp"
#include "bprelab/offspring.hpp"
#include "bprelab/rng.hpp"

#include <functional>
#include <optional>
#include <utility>
#include <vector>

namespace bprelab {

enum class InteriorVerdict { Interior, Boundary, Outside };

// critical exponent: least a > 1 with rho(a) = 1, possibly infinite
struct CriticalAlpha {
    ExtReal alpha;
    // true when +infinity was declared only because the doubling bracket hit
    // its cap (as opposed to the closed-form case: every state mean >= 1)
    bool bracket_capped = false;
};

struct CriteriaReport {
    double mean_log_m = 0.0;
    double neg_log_sq = 0.0;
    std::vector<std::pair<double, double>> rho_probes;  // (a, rho(a))
    CriticalAlpha critical_alpha;
    ExtReal w1_xlogx = ExtReal::finite(0.0);
    bool supercritical = false;
    bool ks_hypotheses_hold = false;     // E(ln- m0)^2 < inf and E W1 ln+ W1 < inf
    bool truncation_sensitive = false;   // a ZetaLog state is present
};

struct W1Budget {
    std::size_t mc_samples = 0;  // 0: enumeration only, no Monte Carlo fallback
    std::uint64_t seed = 0;
};

struct W1Moment {
    ExtReal value = ExtReal::finite(0.0);
    bool exact = false;          // enumeration/series rather than Monte Carlo
    double std_error = 0.0;      // Monte Carlo only
};

// Finite mixture of offspring laws modeling the i.i.d. environment.
// Immutable and shareable; every operation is pure.
class EnvironmentLaw {
public:
    struct State {
        OffspringLaw law;
        double weight;
    };

    explicit EnvironmentLaw(std::vector<State> states);

    static EnvironmentLaw single(OffspringLaw law);

    const std::vector<State>& states() const { return states_; }
    std::size_t size() const { return states_.size(); }

    double mean_log_m() const;
    double neg_log_sq_moment() const;
    bool supercritical() const { return mean_log_m() > 0.0; }
    bool has_zeta_log_state() const;

    // rho(a) = E m0^{1-a} = sum_i w_i m_i^{1-a}, exact for the mixture
    double rho(double a) const;

    CriticalAlpha critical_alpha(double tol = 1e-12, double bracket_cap = 1e6) const;

    InteriorVerdict interior_check(double alpha, double margin = 1e-9) const;

    // E phi(W1), W1 = Z1/m0: exact enumeration (finite support) or adaptive
    // series; Monte Carlo under the given budget when summation cannot settle.
    W1Moment w1_weighted_moment(const std::function<double(double)>& phi,
                                const W1Budget& budget = {}) const;

    CriteriaReport kesten_stigum_report() const;

    // index of a state drawn with the mixture weights; a single-state
    // environment consumes no randomness
    std::uint32_t sample_state(StreamRng& rng) const;

private:
    std::vector<State> states_;
    std::vector<double> weight_cdf_;
};

}  // namespace bprelab
