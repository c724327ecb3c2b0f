#pragma once

#include "bprelab/numeric.hpp"
#include "bprelab/rng.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace bprelab {

enum class SumMode { Exact, Auto };

struct SumOptions {
    SumMode mode = SumMode::Auto;
    std::uint64_t exact_cap = 100'000'000ull;   // exact mode refuses beyond this many draws
    std::uint64_t clt_threshold = 1'000'000ull; // auto mode switches to a normal draw above this
};

// One offspring distribution on {0,1,2,...}. Immutable after construction and
// safe to share across threads; sampling takes an explicit generator.
//
// Families:
//   Dirac(k)                point mass at k >= 1
//   TwoAtom(a,b,q)          P(X=a)=q, P(X=b)=1-q
//   Geometric(p)            P(X=k) = (1-p) p^k on {0,1,...}, mean p/(1-p)
//   Poisson(lambda)
//   Table(p0..pK)           explicit pmf
//   ZetaLog(K)              p_k proportional to 1/(k^2 ln^2 k), 2 <= k <= K;
//                           E X ln+ X grows like ln ln K, the barely-divergent case
class OffspringLaw {
public:
    enum class Family { Dirac, TwoAtom, Geometric, Poisson, Table, ZetaLog };

    static OffspringLaw dirac(std::uint64_t k);
    static OffspringLaw two_atom(std::uint64_t a, std::uint64_t b, double q);
    static OffspringLaw geometric(double p);
    static OffspringLaw poisson(double lambda);
    static OffspringLaw table(std::vector<double> pmf);
    static OffspringLaw zeta_log(std::uint64_t k_max);

    Family family() const { return family_; }
    std::string name() const;

    double pmf(std::uint64_t k) const;
    double mean() const { return mean_; }
    double variance() const { return var_; }

    // E X^alpha, alpha >= 1. Closed form where it exists, otherwise adaptive
    // series with a geometric tail majorant (relative cutoff 1e-14).
    ExtReal power_moment(double alpha) const;
    // E X ln+ X, same convergence policy.
    ExtReal xlogx_moment() const;

    std::uint64_t sample_one(StreamRng& rng) const;

    // Sum of z i.i.d. draws. Exact closures (both modes): Dirac -> k*z,
    // TwoAtom -> a*Binomial + b*rest, Poisson -> Poisson(z*lambda),
    // Geometric -> negative binomial via gamma-Poisson. Without a closure,
    // exact mode performs z draws (refusing beyond opts.exact_cap) and auto
    // mode substitutes a rounded clamped normal above opts.clt_threshold.
    // Saturates at the top of the 64-bit range instead of wrapping.
    std::uint64_t sample_sum(std::uint64_t z, StreamRng& rng, const SumOptions& opts = {}) const;

    bool has_sum_closure() const;
    bool finite_support() const;
    // largest k with pmf > 0 for finite-support families
    std::uint64_t support_max() const;

private:
    OffspringLaw() = default;
    void finalize();           // computes mean/variance, validates
    double raw_moment(double alpha) const;  // finite-support only

    Family family_ = Family::Dirac;
    std::uint64_t k_ = 1;                  // Dirac k / ZetaLog K
    std::uint64_t a_ = 0, b_ = 0;          // TwoAtom atoms
    double q_ = 0.0;                       // TwoAtom weight on a
    double p_ = 0.0;                       // Geometric p
    double lambda_ = 0.0;                  // Poisson rate
    std::vector<double> table_;            // Table pmf
    std::vector<double> table_cdf_;
    double zeta_norm_ = 0.0;               // ZetaLog normalizer
    double mean_ = 0.0;
    double var_ = 0.0;
};

}  // namespace bprelab
