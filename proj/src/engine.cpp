#include "bprelab/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace bprelab {

void SimConfig::validate() const {
    if (n_max < 1) throw std::invalid_argument("SimConfig: n_max must be >= 1");
    if (!(log_scale_switch > 0.0)) throw std::invalid_argument("SimConfig: log_scale_switch must be > 0");
    if (static_cast<double>(clt_threshold) > log_scale_switch) {
        throw std::invalid_argument("SimConfig: clt_threshold must be <= log_scale_switch");
    }
}

std::uint64_t step(std::uint64_t z, const OffspringLaw& law, StreamRng& rng, const SimConfig& cfg) {
    if (z == 0) return 0;
    return law.sample_sum(z, rng, cfg.sum_options());
}

namespace {

// integer tracking must hand over to log-scale before k*z can wrap
constexpr double kHardSwitch = 4e17;

struct PathState {
    std::uint64_t z = 1;
    double log_pi = 0.0;
    double w = 1.0;
    double w_star = 1.0;
    bool int_mode = true;
    int extinct_at = -1;
    int switched_at = -1;
};

// One generation under `law`; shared by every runner.
inline void advance(PathState& s, const OffspringLaw& law, StreamRng& rng, const SimConfig& cfg,
                    double switch_limit, int n) {
    const double m = law.mean();
    if (s.int_mode) {
        if (s.z > 0) s.z = law.sample_sum(s.z, rng, cfg.sum_options());
        s.log_pi += std::log(m);
        s.w = static_cast<double>(s.z) * std::exp(-s.log_pi);
        if (s.z == 0 && s.extinct_at < 0) s.extinct_at = n;
        if (static_cast<double>(s.z) > switch_limit) {
            s.int_mode = false;
            s.switched_at = n;
        }
    } else {
        // Z_{n+1} = sum over Z_n individuals: given the environment,
        // Var(W_{n+1} - W_n) = W_n Var(X) / (m^2 Pi_n) with Pi_n pre-step
        const double pi_prev = std::exp(s.log_pi);
        const double var_w = s.w * law.variance() / (m * m * pi_prev);
        if (var_w > 0.0) {
            std::normal_distribution<double> d(0.0, std::sqrt(var_w));
            s.w = std::max(0.0, s.w + d(rng));
        }
        s.log_pi += std::log(m);
        if (s.w == 0.0 && s.extinct_at < 0) s.extinct_at = n;
    }
    s.w_star = std::max(s.w_star, s.w);
}

template <class NextLaw, class Record>
void run_path(const SimConfig& cfg, StreamRng& rng, NextLaw&& next_law, Record&& record) {
    const double switch_limit = std::min(cfg.log_scale_switch, kHardSwitch);
    PathState s;
    record(0, s);
    for (int n = 1; n <= cfg.n_max; ++n) {
        const OffspringLaw& law = next_law(n - 1, rng);
        advance(s, law, rng, cfg, switch_limit, n);
        record(n, s);
    }
}

struct TrajectoryRecorder {
    Trajectory& t;
    void operator()(int, const PathState& s) const {
        t.z.push_back(s.int_mode ? s.z : kLogScaleMarker);
        t.log_pi.push_back(s.log_pi);
        t.w.push_back(s.w);
        t.w_star.push_back(s.w_star);
        t.switched_at = s.switched_at;
        if (s.extinct_at >= 0 && !t.extinct_at) t.extinct_at = s.extinct_at;
    }
};

}  // namespace

Trajectory run_quenched(std::span<const OffspringLaw> env_seq, const SimConfig& cfg, StreamRng& rng) {
    cfg.validate();
    if (env_seq.size() < static_cast<std::size_t>(cfg.n_max)) {
        throw std::invalid_argument("run_quenched: environment sequence shorter than n_max");
    }
    Trajectory t;
    run_path(cfg, rng, [&](int n, StreamRng&) -> const OffspringLaw& {
        return env_seq[static_cast<std::size_t>(n)];
    }, TrajectoryRecorder{t});
    return t;
}

Trajectory run_annealed(const EnvironmentLaw& env, const SimConfig& cfg, std::uint64_t stream_index) {
    cfg.validate();
    StreamRng rng(cfg.seed, stream_index);
    Trajectory t;
    run_path(cfg, rng, [&](int, StreamRng& r) -> const OffspringLaw& {
        const auto id = env.sample_state(r);
        t.env_ids.push_back(id);
        return env.states()[id].law;
    }, TrajectoryRecorder{t});
    return t;
}

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("BPRE_LAB_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

BatchResult batch(const EnvironmentLaw& env, const SimConfig& cfg, std::size_t count,
                  std::span<const int> collect_at, int threads) {
    cfg.validate();
    if (count < 1) throw std::invalid_argument("batch: count must be >= 1");
    std::vector<int> collect(collect_at.begin(), collect_at.end());
    std::sort(collect.begin(), collect.end());
    collect.erase(std::unique(collect.begin(), collect.end()), collect.end());
    if (collect.empty()) collect.push_back(cfg.n_max);
    for (int n : collect) {
        if (n < 0 || n > cfg.n_max) throw std::invalid_argument("batch: collect_at outside [0, n_max]");
    }

    BatchResult out;
    out.collect_at = collect;
    out.count = count;
    out.w.assign(collect.size(), std::vector<double>(count));
    out.w_star.assign(collect.size(), std::vector<double>(count));

    const auto run_range = [&](std::size_t lo, std::size_t hi) {
        for (std::size_t traj = lo; traj < hi; ++traj) {
            StreamRng rng(cfg.seed, traj);
            std::size_t slot = 0;
            run_path(cfg, rng, [&](int, StreamRng& r) -> const OffspringLaw& {
                return env.states()[env.sample_state(r)].law;
            }, [&](int n, const PathState& s) {
                while (slot < collect.size() && collect[slot] == n) {
                    out.w[slot][traj] = s.w;
                    out.w_star[slot][traj] = s.w_star;
                    ++slot;
                }
            });
        }
    };

    const int n_threads = std::max(1, std::min<int>(resolve_threads(threads),
                                                    static_cast<int>(count)));
    if (n_threads == 1) {
        run_range(0, count);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(n_threads));
        const std::size_t chunk = (count + static_cast<std::size_t>(n_threads) - 1) /
                                  static_cast<std::size_t>(n_threads);
        for (int ti = 0; ti < n_threads; ++ti) {
            const std::size_t lo = static_cast<std::size_t>(ti) * chunk;
            const std::size_t hi = std::min(count, lo + chunk);
            if (lo >= hi) break;
            pool.emplace_back(run_range, lo, hi);
        }
        for (auto& th : pool) th.join();
    }

    // deterministic sequential reduction over the stored samples
    out.survivors.resize(collect.size());
    out.w_stats.resize(collect.size());
    for (std::size_t ci = 0; ci < collect.size(); ++ci) {
        std::size_t alive = 0;
        for (double v : out.w[ci]) alive += v > 0.0 ? 1 : 0;
        out.survivors[ci] = alive;
        out.w_stats[ci] = mean_se(out.w[ci]);
    }
    return out;
}

LargeDevResult log_pi_large_dev(const EnvironmentLaw& env, std::uint64_t seed, double b, int n_max,
                                std::size_t count, int threads) {
    if (n_max < 1 || count < 1) throw std::invalid_argument("log_pi_large_dev: bad sizes");
    const double b_min = std::exp(-env.mean_log_m());
    if (!(b > b_min && b < 1.0)) {
        std::ostringstream msg;
        msg << "log_pi_large_dev: b must lie in (exp(-E ln m0), 1) = (" << b_min << ", 1), got " << b;
        throw std::invalid_argument(msg.str());
    }

    std::vector<double> log_means(env.size());
    for (std::size_t i = 0; i < env.size(); ++i) log_means[i] = std::log(env.states()[i].law.mean());
    const double rate = std::log(1.0 / b);

    const int n_threads = std::max(1, std::min<int>(resolve_threads(threads),
                                                    static_cast<int>(count)));
    std::vector<std::vector<std::uint64_t>> hits(
        static_cast<std::size_t>(n_threads), std::vector<std::uint64_t>(static_cast<std::size_t>(n_max), 0));

    const auto run_range = [&](int ti, std::size_t lo, std::size_t hi) {
        auto& h = hits[static_cast<std::size_t>(ti)];
        for (std::size_t idx = lo; idx < hi; ++idx) {
            StreamRng rng(seed, idx);
            double s = 0.0;
            for (int n = 1; n <= n_max; ++n) {
                s += log_means[env.sample_state(rng)];
                if (s < rate * static_cast<double>(n)) ++h[static_cast<std::size_t>(n - 1)];
            }
        }
    };

    if (n_threads == 1) {
        run_range(0, 0, count);
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (count + static_cast<std::size_t>(n_threads) - 1) /
                                  static_cast<std::size_t>(n_threads);
        for (int ti = 0; ti < n_threads; ++ti) {
            const std::size_t lo = static_cast<std::size_t>(ti) * chunk;
            const std::size_t hi = std::min(count, lo + chunk);
            if (lo >= hi) break;
            pool.emplace_back(run_range, ti, lo, hi);
        }
        for (auto& th : pool) th.join();
    }

    LargeDevResult out;
    out.b = b;
    out.count = count;
    out.prob.resize(static_cast<std::size_t>(n_max));
    out.partial_sum.resize(static_cast<std::size_t>(n_max));
    double acc = 0.0;
    for (int n = 0; n < n_max; ++n) {
        std::uint64_t total = 0;
        for (const auto& h : hits) total += h[static_cast<std::size_t>(n)];  // integer merge: exact
        out.prob[static_cast<std::size_t>(n)] = static_cast<double>(total) / static_cast<double>(count);
        acc += out.prob[static_cast<std::size_t>(n)];
        out.partial_sum[static_cast<std::size_t>(n)] = acc;
    }
    return out;
}

}  // namespace bprelab
