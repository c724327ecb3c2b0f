#pragma once

#include "bprelab/engine.hpp"
#include "bprelab/environment.hpp"
#include "bprelab/numeric.hpp"
#include "bprelab/slowvary.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bprelab {

enum class Verdict { Converging, Diverging, Inconclusive };
std::string to_string(Verdict v);

// Finite-sample policy behind the truncation-ladder verdict. The ladder caps
// are 10^1..10^rungs times the median of the positive phi values. Increments
// backed by fewer than min_exceedance tail samples are statistically
// unresolved; with fewer than three resolved increments the sample carries no
// evidence of divergence. Otherwise the ln-increment slope over the top three
// resolved rungs decides: growth beyond growth_slope is divergence, decay is
// convergence, the band in between is inconclusive.
struct VerdictPolicy {
    double top_increment_rel = 0.01;
    double growth_slope = 0.10;
    std::uint64_t min_exceedance = 30;
    int rungs = 6;
};

struct MomentReport {
    double estimate = 0.0;
    double std_error = 0.0;
    std::size_t n_samples = 0;
    int generation = -1;
    std::vector<double> caps;          // ladder caps T
    std::vector<double> capped_means;  // E min(phi, T)
    std::vector<std::uint64_t> exceedance;  // #{phi > T} per cap
    Verdict verdict = Verdict::Inconclusive;
    double top_slope = 0.0;            // fitted ln-increment slope (0 when unused)
    bool tail_resolved = true;         // false when the support guard tripped
    std::optional<double> estimate_half_n;  // same weight at generation n/2
};

MomentReport weighted_moment(std::span<const double> samples,
                             const std::function<double(double)>& phi,
                             const VerdictPolicy& policy = {}, int generation = -1);

// Hill tail-index estimate from the top k order statistics. Requires at least
// k+1 positive samples; returns +inf when the top spacings are all zero.
double hill_index(std::span<const double> samples, std::size_t k);

struct TailReport {
    std::vector<std::pair<std::size_t, double>> ladder;  // (k, hill estimate)
    std::size_t chosen_k = 0;
    double chosen = 0.0;        // midpoint of the most stable adjacent pair
    double stability_lo = 0.0;  // min/max across the ladder
    double stability_hi = 0.0;
    std::size_t positive_samples = 0;
    std::size_t n_samples = 0;
    int generation = -1;
    // labeled a consistency check: the tail exponent's identification with the
    // critical moment exponent rests on cited literature, not a displayed formula
    std::string label = "consistency_check";
};

TailReport tail_report(std::span<const double> samples, std::span<const double> k_fractions,
                       int generation = -1);

// simulation budget shared by the theorem verdicts
struct SimBudget {
    std::size_t count = 200'000;
    int generation = 20;
    std::uint64_t seed = 1;
    int threads = 0;
    SumMode mode = SumMode::Auto;
    // forwarded to SimConfig; families without a sum closure draw individual
    // offspring below this population size, so heavy ZetaLog environments
    // want it small
    std::uint64_t clt_threshold = 1'000'000ull;
};

enum class Prediction { Finite, Infinite, TheoremSilent };
std::string to_string(Prediction p);

struct Theorem11Report {
    double alpha = 0.0;
    std::string ell_name;
    InteriorVerdict interior = InteriorVerdict::Boundary;
    W1Moment w1_moment;            // condition (a), exact where possible
    Prediction predicted = Prediction::TheoremSilent;
    MomentReport observed;         // condition (c) from simulated W_n
    bool agreement = false;        // predicted matches observed (silent excluded)
};

Theorem11Report verdict_theorem11(const EnvironmentLaw& env, double alpha, const SlowVarying& ell,
                                  const SimBudget& budget, const VerdictPolicy& policy = {});

struct Theorem12Report {
    std::string ell_name;
    double e_m_inv = 0.0;          // E m0^{-1}
    bool main_hypothesis = false;  // E m0^{-1} < 1
    bool relaxed_branch = false;   // l slowly varying, finite E m0^{-delta}
    W1Moment w1_hat_moment;        // E W1 hat-l(W1)
    Prediction predicted = Prediction::TheoremSilent;  // sufficiency only
    MomentReport observed_w;
    MomentReport observed_w_star;
    bool consistent = false;  // hypotheses hold => both observed converging
};

Theorem12Report verdict_theorem12(const EnvironmentLaw& env, const ConcaveEll& ell,
                                  const SimBudget& budget, const VerdictPolicy& policy = {});

struct Theorem13Report {
    CriteriaReport criteria;
    MomentReport observed_w_star;          // phi(x) = x on running-max samples
    MomentReport observed_w_star_weighted; // bounded correction x*l(x), l = 1 - 1/(2x)
    std::vector<std::pair<int, MeanSe>> w_drift;  // E W_n across generations
    bool drift_ok = false;                 // every mean within 4 SE of 1
    bool truncation_sensitive = false;
    bool consistent = false;
};

Theorem13Report verdict_theorem13(const EnvironmentLaw& env, const SimBudget& budget,
                                  const VerdictPolicy& policy = {});

// slope of ln(y) against x over strictly positive entries
double fit_log_slope(std::span<const double> x, std::span<const double> y);

}  // namespace bprelab
