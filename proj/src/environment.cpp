#include "bprelab/environment.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace bprelab {

EnvironmentLaw::EnvironmentLaw(std::vector<State> states) : states_(std::move(states)) {
    if (states_.empty()) throw std::invalid_argument("EnvironmentLaw: need at least one state");
    double total = 0.0;
    for (const auto& s : states_) {
        if (!(s.weight >= 0.0)) throw std::invalid_argument("EnvironmentLaw: weights must be >= 0");
        total += s.weight;
    }
    if (std::abs(total - 1.0) > 1e-12) {
        std::ostringstream msg;
        msg << "EnvironmentLaw: weights sum to " << total << ", expected 1 within 1e-12";
        throw std::invalid_argument(msg.str());
    }
    weight_cdf_.resize(states_.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < states_.size(); ++i) {
        acc += states_[i].weight;
        weight_cdf_[i] = acc;
    }
    weight_cdf_.back() = 1.0;
}

EnvironmentLaw EnvironmentLaw::single(OffspringLaw law) {
    return EnvironmentLaw({State{std::move(law), 1.0}});
}

double EnvironmentLaw::mean_log_m() const {
    double s = 0.0;
    for (const auto& st : states_) s += st.weight * std::log(st.law.mean());
    return s;
}

double EnvironmentLaw::neg_log_sq_moment() const {
    double s = 0.0;
    for (const auto& st : states_) {
        const double lm = ln_minus(st.law.mean());
        s += st.weight * lm * lm;
    }
    return s;
}

bool EnvironmentLaw::has_zeta_log_state() const {
    return std::any_of(states_.begin(), states_.end(), [](const State& s) {
        return s.law.family() == OffspringLaw::Family::ZetaLog;
    });
}

double EnvironmentLaw::rho(double a) const {
    if (!(a >= 1.0)) throw std::invalid_argument("rho: a must be >= 1");
    if (a == 1.0) return 1.0;  // m^0 = 1 for every state
    double s = 0.0;
    for (const auto& st : states_) s += st.weight * std::pow(st.law.mean(), 1.0 - a);
    return s;
}

CriticalAlpha EnvironmentLaw::critical_alpha(double tol, double bracket_cap) const {
    if (!supercritical()) throw std::runtime_error("critical_alpha: environment is not supercritical");
    if (!(tol > 0.0)) throw std::invalid_argument("critical_alpha: tol must be > 0");

    // with every state mean >= 1 each term m^{1-a} is nonincreasing in a, so
    // rho < 1 on all of (1, inf): proven infinite, no bracket needed
    const double min_mean =
        std::min_element(states_.begin(), states_.end(), [](const State& x, const State& y) {
            return x.law.mean() < y.law.mean();
        })->law.mean();
    if (min_mean >= 1.0) return {ExtReal::infinite(), false};

    double lo = 1.0;
    double hi = 2.0;
    while (rho(hi) < 1.0) {
        lo = hi;
        hi = 1.0 + 2.0 * (hi - 1.0);
        if (hi > bracket_cap) return {ExtReal::infinite(), true};
    }
    while (hi - lo > tol * std::max(1.0, lo)) {
        const double mid = 0.5 * (lo + hi);
        (rho(mid) < 1.0 ? lo : hi) = mid;
    }
    return {ExtReal::finite(0.5 * (lo + hi)), false};
}

InteriorVerdict EnvironmentLaw::interior_check(double alpha, double margin) const {
    if (!(alpha > 1.0)) throw std::invalid_argument("interior_check: alpha must be > 1");
    if (rho(alpha) > 1.0) return InteriorVerdict::Outside;
    const auto crit = critical_alpha();
    if (crit.alpha.is_infinite()) {
        return crit.bracket_capped ? InteriorVerdict::Boundary : InteriorVerdict::Interior;
    }
    if (alpha + margin < crit.alpha.value) return InteriorVerdict::Interior;
    return InteriorVerdict::Boundary;
}

W1Moment EnvironmentLaw::w1_weighted_moment(const std::function<double(double)>& phi,
                                            const W1Budget& budget) const {
    // per-state contribution: sum_k p_k phi(k/m)
    double total = 0.0;
    bool all_exact = true;
    for (const auto& st : states_) {
        const double m = st.law.mean();
        if (st.law.finite_support()) {
            const std::uint64_t hi = st.law.support_max();
            double s = 0.0;
            for (std::uint64_t k = 0; k <= hi; ++k) {
                const double p = st.law.pmf(k);
                if (p > 0.0) s += p * phi(static_cast<double>(k) / m);
            }
            total += st.weight * s;
        } else {
            const auto s = sum_series(
                [&](std::uint64_t k) { return st.law.pmf(k) * phi(static_cast<double>(k) / m); }, 0);
            if (s.is_finite()) {
                total += st.weight * s.value;
            } else {
                all_exact = false;
                break;
            }
        }
    }
    if (all_exact) return {ExtReal::finite(total), true, 0.0};

    if (budget.mc_samples == 0) return {ExtReal::undetermined(), false, 0.0};
    StreamRng rng(budget.seed, 0x77315ull);
    std::vector<double> vals(budget.mc_samples);
    for (auto& v : vals) {
        const auto idx = sample_state(rng);
        const auto& st = states_[idx];
        v = phi(static_cast<double>(st.law.sample_one(rng)) / st.law.mean());
    }
    const auto ms = mean_se(vals);
    return {ExtReal::finite(ms.mean), false, ms.se};
}

CriteriaReport EnvironmentLaw::kesten_stigum_report() const {
    CriteriaReport rep;
    rep.mean_log_m = mean_log_m();
    rep.neg_log_sq = neg_log_sq_moment();
    rep.supercritical = supercritical();
    rep.truncation_sensitive = has_zeta_log_state();
    for (double a : {1.0, 1.2, 1.5, 2.0, 3.0}) rep.rho_probes.emplace_back(a, rho(a));
    rep.critical_alpha = supercritical() ? critical_alpha() : CriticalAlpha{ExtReal::undetermined(), false};
    const auto xlx = w1_weighted_moment([](double x) { return x * ln_plus(x); });
    rep.w1_xlogx = xlx.value;
    rep.ks_hypotheses_hold = std::isfinite(rep.neg_log_sq) && xlx.value.is_finite();
    return rep;
}

std::uint32_t EnvironmentLaw::sample_state(StreamRng& rng) const {
    if (states_.size() == 1) return 0;
    const double u = rng.uniform01();
    const auto it = std::lower_bound(weight_cdf_.begin(), weight_cdf_.end(), u);
    return static_cast<std::uint32_t>(it - weight_cdf_.begin());
}

}  // namespace bprelab
