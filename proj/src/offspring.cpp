#include "bprelab/offspring.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace bprelab {

namespace {

constexpr std::uint64_t kU64Max = std::numeric_limits<std::uint64_t>::max();

std::uint64_t saturating_mul(std::uint64_t a, std::uint64_t b) {
    std::uint64_t out = 0;
    if (__builtin_mul_overflow(a, b, &out)) return kU64Max;
    return out;
}

std::uint64_t saturating_add(std::uint64_t a, std::uint64_t b) {
    std::uint64_t out = 0;
    if (__builtin_add_overflow(a, b, &out)) return kU64Max;
    return out;
}

std::uint64_t clamp_round_u64(double x) {
    if (!(x > 0.0)) return 0;
    if (x >= 1.8e19) return kU64Max;
    return static_cast<std::uint64_t>(std::llround(std::min(x, 9.2e18)));
}

double pow_u64(std::uint64_t k, double alpha) {
    return k == 0 ? 0.0 : std::pow(static_cast<double>(k), alpha);
}

// acceptance-ratio shape for the ZetaLog rejection sampler (see sample_one)
double zeta_log_shape(std::uint64_t k) {
    const double lk = std::log(static_cast<double>(k));
    return (static_cast<double>(k) + 1.0) / (static_cast<double>(k) * lk * lk);
}

}  // namespace

OffspringLaw OffspringLaw::dirac(std::uint64_t k) {
    OffspringLaw law;
    law.family_ = Family::Dirac;
    law.k_ = k;
    law.finalize();
    return law;
}

OffspringLaw OffspringLaw::two_atom(std::uint64_t a, std::uint64_t b, double q) {
    if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("TwoAtom: q must be in [0,1]");
    OffspringLaw law;
    law.family_ = Family::TwoAtom;
    law.a_ = a;
    law.b_ = b;
    law.q_ = q;
    law.finalize();
    return law;
}

OffspringLaw OffspringLaw::geometric(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("Geometric: p must be in (0,1)");
    OffspringLaw law;
    law.family_ = Family::Geometric;
    law.p_ = p;
    law.finalize();
    return law;
}

OffspringLaw OffspringLaw::poisson(double lambda) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw std::invalid_argument("Poisson: lambda must be positive and finite");
    }
    OffspringLaw law;
    law.family_ = Family::Poisson;
    law.lambda_ = lambda;
    law.finalize();
    return law;
}

OffspringLaw OffspringLaw::table(std::vector<double> pmf) {
    OffspringLaw law;
    law.family_ = Family::Table;
    law.table_ = std::move(pmf);
    double total = 0.0;
    for (double p : law.table_) {
        if (!(p >= 0.0)) throw std::invalid_argument("Table: pmf entries must be >= 0");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-12) {
        std::ostringstream msg;
        msg << "Table: pmf sums to " << total << ", expected 1 within 1e-12";
        throw std::invalid_argument(msg.str());
    }
    law.table_cdf_.resize(law.table_.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < law.table_.size(); ++i) {
        acc += law.table_[i];
        law.table_cdf_[i] = acc;
    }
    law.table_cdf_.back() = 1.0;
    law.finalize();
    return law;
}

OffspringLaw OffspringLaw::zeta_log(std::uint64_t k_max) {
    if (k_max < 3) throw std::invalid_argument("ZetaLog: K must be >= 3");
    OffspringLaw law;
    law.family_ = Family::ZetaLog;
    law.k_ = k_max;
    double total = 0.0;
    for (std::uint64_t k = 2; k <= k_max; ++k) {
        const double lk = std::log(static_cast<double>(k));
        total += 1.0 / (static_cast<double>(k) * static_cast<double>(k) * lk * lk);
    }
    law.zeta_norm_ = 1.0 / total;
    law.finalize();
    return law;
}

void OffspringLaw::finalize() {
    switch (family_) {
        case Family::Dirac:
            mean_ = static_cast<double>(k_);
            var_ = 0.0;
            break;
        case Family::TwoAtom: {
            const double a = static_cast<double>(a_), b = static_cast<double>(b_);
            mean_ = q_ * a + (1.0 - q_) * b;
            var_ = q_ * a * a + (1.0 - q_) * b * b - mean_ * mean_;
            break;
        }
        case Family::Geometric:
            mean_ = p_ / (1.0 - p_);
            var_ = p_ / ((1.0 - p_) * (1.0 - p_));
            break;
        case Family::Poisson:
            mean_ = lambda_;
            var_ = lambda_;
            break;
        case Family::Table: {
            double m = 0.0, m2 = 0.0;
            for (std::size_t i = 0; i < table_.size(); ++i) {
                m += static_cast<double>(i) * table_[i];
                m2 += static_cast<double>(i) * static_cast<double>(i) * table_[i];
            }
            mean_ = m;
            var_ = m2 - m * m;
            break;
        }
        case Family::ZetaLog: {
            double m = 0.0, m2 = 0.0;
            for (std::uint64_t k = 2; k <= k_; ++k) {
                const double p = pmf(k);
                m += static_cast<double>(k) * p;
                m2 += static_cast<double>(k) * static_cast<double>(k) * p;
            }
            mean_ = m;
            var_ = m2 - m * m;
            break;
        }
    }
    var_ = std::max(var_, 0.0);
    if (!(mean_ > 0.0)) throw std::invalid_argument("OffspringLaw: mean must be > 0");
}

std::string OffspringLaw::name() const {
    std::ostringstream s;
    switch (family_) {
        case Family::Dirac: s << "dirac(" << k_ << ")"; break;
        case Family::TwoAtom: s << "two_atom(" << a_ << "," << b_ << ",q=" << q_ << ")"; break;
        case Family::Geometric: s << "geometric(p=" << p_ << ")"; break;
        case Family::Poisson: s << "poisson(" << lambda_ << ")"; break;
        case Family::Table: s << "table[" << table_.size() << "]"; break;
        case Family::ZetaLog: s << "zeta_log(K=" << k_ << ")"; break;
    }
    return s.str();
}

double OffspringLaw::pmf(std::uint64_t k) const {
    switch (family_) {
        case Family::Dirac:
            return k == k_ ? 1.0 : 0.0;
        case Family::TwoAtom:
            if (a_ == b_) return k == a_ ? 1.0 : 0.0;
            if (k == a_) return q_;
            if (k == b_) return 1.0 - q_;
            return 0.0;
        case Family::Geometric:
            return (1.0 - p_) * std::pow(p_, static_cast<double>(k));
        case Family::Poisson: {
            const double kd = static_cast<double>(k);
            return std::exp(kd * std::log(lambda_) - lambda_ - std::lgamma(kd + 1.0));
        }
        case Family::Table:
            return k < table_.size() ? table_[k] : 0.0;
        case Family::ZetaLog: {
            if (k < 2 || k > k_) return 0.0;
            const double lk = std::log(static_cast<double>(k));
            return zeta_norm_ / (static_cast<double>(k) * static_cast<double>(k) * lk * lk);
        }
    }
    return 0.0;
}

bool OffspringLaw::finite_support() const {
    return family_ == Family::Dirac || family_ == Family::TwoAtom ||
           family_ == Family::Table || family_ == Family::ZetaLog;
}

std::uint64_t OffspringLaw::support_max() const {
    switch (family_) {
        case Family::Dirac: return k_;
        case Family::TwoAtom: return std::max(a_, b_);
        case Family::Table: return table_.empty() ? 0 : table_.size() - 1;
        case Family::ZetaLog: return k_;
        default:
            throw std::logic_error("support_max: infinite support");
    }
}

double OffspringLaw::raw_moment(double alpha) const {
    // finite summation against a supplied power; callers guard support
    double sum = 0.0;
    const std::uint64_t hi = support_max();
    for (std::uint64_t k = (family_ == Family::ZetaLog ? 2 : 0); k <= hi; ++k) {
        const double p = pmf(k);
        if (p > 0.0) sum += p * pow_u64(k, alpha);
    }
    return sum;
}

ExtReal OffspringLaw::power_moment(double alpha) const {
    if (!(alpha >= 1.0)) throw std::invalid_argument("power_moment: alpha must be >= 1");
    switch (family_) {
        case Family::Dirac:
            return ExtReal::finite(pow_u64(k_, alpha));
        case Family::TwoAtom:
            return ExtReal::finite(q_ * pow_u64(a_, alpha) + (1.0 - q_) * pow_u64(b_, alpha));
        case Family::Table:
        case Family::ZetaLog:
            return ExtReal::finite(raw_moment(alpha));
        case Family::Geometric:
            return sum_series([this, alpha](std::uint64_t k) { return pmf(k) * pow_u64(k, alpha); }, 0);
        case Family::Poisson:
            return sum_series([this, alpha](std::uint64_t k) { return pmf(k) * pow_u64(k, alpha); }, 0);
    }
    return ExtReal::undetermined();
}

ExtReal OffspringLaw::xlogx_moment() const {
    const auto f = [](std::uint64_t k) {
        return static_cast<double>(k) * ln_plus(static_cast<double>(k));
    };
    switch (family_) {
        case Family::Dirac:
            return ExtReal::finite(f(k_));
        case Family::TwoAtom:
            return ExtReal::finite(q_ * f(a_) + (1.0 - q_) * f(b_));
        case Family::Table:
        case Family::ZetaLog: {
            double sum = 0.0;
            const std::uint64_t hi = support_max();
            for (std::uint64_t k = (family_ == Family::ZetaLog ? 2 : 0); k <= hi; ++k) {
                const double p = pmf(k);
                if (p > 0.0) sum += p * f(k);
            }
            return ExtReal::finite(sum);
        }
        case Family::Geometric:
        case Family::Poisson:
            return sum_series([this, &f](std::uint64_t k) { return pmf(k) * f(k); }, 0);
    }
    return ExtReal::undetermined();
}

std::uint64_t OffspringLaw::sample_one(StreamRng& rng) const {
    switch (family_) {
        case Family::Dirac:
            return k_;
        case Family::TwoAtom:
            return rng.uniform01() <= q_ ? a_ : b_;
        case Family::Geometric: {
            std::geometric_distribution<std::int64_t> d(1.0 - p_);
            return static_cast<std::uint64_t>(d(rng));
        }
        case Family::Poisson: {
            std::poisson_distribution<std::int64_t> d(lambda_);
            return static_cast<std::uint64_t>(d(rng));
        }
        case Family::Table: {
            const double u = rng.uniform01();
            const auto it = std::lower_bound(table_cdf_.begin(), table_cdf_.end(), u);
            return static_cast<std::uint64_t>(it - table_cdf_.begin());
        }
        case Family::ZetaLog: {
            // rejection from floor(1/U), U ~ Unif(0, 1/2]: the envelope has
            // P(k) = 2/(k(k+1)) on k >= 2, and the target/envelope ratio is
            // maximized at k = 2
            const double m_ratio = zeta_log_shape(2);
            for (;;) {
                const double u = 0.5 * rng.uniform01();
                const double kd = std::floor(1.0 / u);
                if (kd > static_cast<double>(k_)) continue;
                const std::uint64_t k = static_cast<std::uint64_t>(kd);
                if (rng.uniform01() <= zeta_log_shape(k) / m_ratio) return k;
            }
        }
    }
    return 0;
}

bool OffspringLaw::has_sum_closure() const {
    return family_ == Family::Dirac || family_ == Family::TwoAtom ||
           family_ == Family::Geometric || family_ == Family::Poisson;
}

std::uint64_t OffspringLaw::sample_sum(std::uint64_t z, StreamRng& rng, const SumOptions& opts) const {
    if (z == 0) return 0;
    if (z == 1) return sample_one(rng);
    switch (family_) {
        case Family::Dirac:
            return saturating_mul(k_, z);
        case Family::TwoAtom: {
            // a*N + b*(z-N) with N ~ Binomial(z, q) is distribution-exact
            std::binomial_distribution<std::int64_t> d(static_cast<std::int64_t>(z), q_);
            const std::uint64_t n_a = static_cast<std::uint64_t>(d(rng));
            return saturating_add(saturating_mul(a_, n_a), saturating_mul(b_, z - n_a));
        }
        case Family::Poisson: {
            std::poisson_distribution<std::int64_t> d(lambda_ * static_cast<double>(z));
            return static_cast<std::uint64_t>(d(rng));
        }
        case Family::Geometric: {
            // negative binomial: Poisson mixed over Gamma(z, p/(1-p))
            std::gamma_distribution<double> g(static_cast<double>(z), p_ / (1.0 - p_));
            std::poisson_distribution<std::int64_t> d(g(rng));
            return static_cast<std::uint64_t>(d(rng));
        }
        case Family::Table:
        case Family::ZetaLog:
            break;
    }

    if (opts.mode == SumMode::Exact) {
        if (z > opts.exact_cap) {
            std::ostringstream msg;
            msg << "sample_sum(exact): z=" << z << " exceeds the exact-work cap "
                << opts.exact_cap << " for " << name();
            throw std::runtime_error(msg.str());
        }
    } else if (z > opts.clt_threshold) {
        // normal substitution: relative bias O(z^{-1/2}) above the threshold
        std::normal_distribution<double> n(static_cast<double>(z) * mean_,
                                           std::sqrt(static_cast<double>(z) * var_));
        return clamp_round_u64(n(rng));
    }

    std::uint64_t total = 0;
    for (std::uint64_t i = 0; i < z; ++i) total = saturating_add(total, sample_one(rng));
    return total;
}

}  // namespace bprelab
