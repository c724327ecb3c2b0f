#pragma once

#include <boost/math/distributions/chi_squared.hpp>

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

namespace testutil {

// Pearson chi-square goodness-of-fit against expected probabilities.
// Bins with expected count < 5 are pooled into the previous bin.
// Returns true when the statistic is below the (1 - significance) quantile.
inline bool chi_square_fit(const std::map<std::uint64_t, std::uint64_t>& observed,
                           const std::vector<std::pair<std::uint64_t, double>>& expected_probs,
                           std::uint64_t n_draws, double significance) {
    std::vector<double> exp_counts;
    std::vector<double> obs_counts;
    double tail_prob = 1.0;
    for (const auto& [k, p] : expected_probs) {
        tail_prob -= p;
        const double e = p * static_cast<double>(n_draws);
        const auto it = observed.find(k);
        const double o = it == observed.end() ? 0.0 : static_cast<double>(it->second);
        if (!exp_counts.empty() && e < 5.0) {
            exp_counts.back() += e;
            obs_counts.back() += o;
        } else {
            exp_counts.push_back(e);
            obs_counts.push_back(o);
        }
    }
    // everything beyond the listed support goes into one overflow bin
    if (tail_prob > 1e-12) {
        double listed_obs = 0.0;
        for (double o : obs_counts) listed_obs += o;
        exp_counts.push_back(tail_prob * static_cast<double>(n_draws));
        obs_counts.push_back(static_cast<double>(n_draws) - listed_obs);
    }
    if (exp_counts.size() < 2) throw std::invalid_argument("chi_square_fit: too few bins");
    double stat = 0.0;
    for (std::size_t i = 0; i < exp_counts.size(); ++i) {
        const double d = obs_counts[i] - exp_counts[i];
        stat += d * d / exp_counts[i];
    }
    boost::math::chi_squared dist(static_cast<double>(exp_counts.size() - 1));
    return stat < boost::math::quantile(dist, 1.0 - significance);
}

}  // namespace testutil
