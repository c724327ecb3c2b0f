#pragma once

#include "bprelab/environment.hpp"
#include "bprelab/numeric.hpp"
#include "bprelab/offspring.hpp"
#include "bprelab/rng.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace bprelab {

struct SimConfig {
    int n_max = 20;
    std::uint64_t seed = 0;
    SumMode mode = SumMode::Auto;
    std::uint64_t exact_cap = 100'000'000ull;
    std::uint64_t clt_threshold = 1'000'000ull;
    // population size above which the state is carried as (W, ln Pi) with
    // Gaussian-increment stepping; Pi grows exponentially, W is the object
    // of interest
    double log_scale_switch = 1e12;

    void validate() const;
    SumOptions sum_options() const { return {mode, exact_cap, clt_threshold}; }
};

// marker stored in Trajectory::z once the run has left integer tracking
inline constexpr std::uint64_t kLogScaleMarker = std::numeric_limits<std::uint64_t>::max();

struct Trajectory {
    std::vector<std::uint64_t> z;   // exact counts; kLogScaleMarker after the switch
    std::vector<double> log_pi;     // ln Pi_n
    std::vector<double> w;          // W_n = Z_n / Pi_n
    std::vector<double> w_star;     // running max of w
    std::vector<std::uint32_t> env_ids;  // sampled state per generation (annealed)
    std::optional<int> extinct_at;
    int switched_at = -1;           // first generation in log-scale mode, -1 if never

    // ln Z_n, valid in either mode (-inf once extinct)
    double log_z(int n) const { return std::log(w[static_cast<std::size_t>(n)]) + log_pi[static_cast<std::size_t>(n)]; }
};

// One generation step: sum of z offspring draws; z = 0 returns 0 without
// consuming randomness.
std::uint64_t step(std::uint64_t z, const OffspringLaw& law, StreamRng& rng, const SimConfig& cfg);

// Fixed environment sequence (quenched law); env_seq.size() >= cfg.n_max.
Trajectory run_quenched(std::span<const OffspringLaw> env_seq, const SimConfig& cfg, StreamRng& rng);

// Fresh i.i.d. environment sequence drawn from env (annealed law); the
// trajectory stream is derived from (cfg.seed, stream_index).
Trajectory run_annealed(const EnvironmentLaw& env, const SimConfig& cfg, std::uint64_t stream_index = 0);

struct BatchResult {
    std::vector<int> collect_at;
    std::size_t count = 0;
    // [collect index][trajectory]; w_star rows are running maxima up to that n
    std::vector<std::vector<double>> w;
    std::vector<std::vector<double>> w_star;
    std::vector<std::size_t> survivors;
    std::vector<MeanSe> w_stats;
};

// count independent annealed trajectories on streams (seed, 0..count-1),
// executed across threads; aggregation is order-insensitive and the result
// identical for every thread count.
BatchResult batch(const EnvironmentLaw& env, const SimConfig& cfg, std::size_t count,
                  std::span<const int> collect_at, int threads = 0);

struct LargeDevResult {
    double b = 0.0;
    std::size_t count = 0;
    std::vector<double> prob;         // per n = 1..n_max: P(Pi_n^{-1} > b^n)
    std::vector<double> partial_sum;  // running sum of prob
};

// Estimates P(sum ln m_i < n ln(1/b)) by simulating environment sequences
// only. Requires exp(-E ln m0) < b < 1.
LargeDevResult log_pi_large_dev(const EnvironmentLaw& env, std::uint64_t seed, double b, int n_max,
                                std::size_t count, int threads = 0);

// --threads / BPRE_LAB_THREADS / hardware in that order
int resolve_threads(int requested);

}  // namespace bprelab
