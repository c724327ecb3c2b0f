#include "bprelab/engine.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace bprelab;

TEST_SUITE_BEGIN("engine");

namespace {

EnvironmentLaw two_point_env() {
    return EnvironmentLaw({
        {OffspringLaw::dirac(4), 0.5},
        {OffspringLaw::two_atom(0, 1, 0.5), 0.5},
    });
}

}  // namespace

TEST_CASE("step basics") {
    SimConfig cfg;
    StreamRng rng(1, 0), before = rng;
    // extinction is absorbing and consumes no randomness
    CHECK(step(0, OffspringLaw::geometric(0.5), rng, cfg) == 0);
    CHECK(rng == before);
    CHECK(step(5, OffspringLaw::dirac(2), rng, cfg) == 10);
}

TEST_CASE("step CLT band for a large population") {
    SimConfig cfg;
    const auto law = OffspringLaw::geometric(2.0 / 3.0);
    for (std::uint64_t s = 0; s < 20; ++s) {
        StreamRng rng(100 + s, 0);
        const double out = static_cast<double>(step(10000, law, rng, cfg));
        CHECK(out / 10000.0 == doctest::Approx(2.0).epsilon(0.05));
    }
}

TEST_CASE("run_quenched deterministic sequences") {
    SimConfig cfg;
    cfg.n_max = 5;
    StreamRng rng(3, 0);
    std::vector<OffspringLaw> seq(5, OffspringLaw::dirac(2));
    const auto t = run_quenched(seq, cfg, rng);
    CHECK(t.z == std::vector<std::uint64_t>{1, 2, 4, 8, 16, 32});
    for (double w : t.w) CHECK(w == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(t.w_star.back() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_FALSE(t.extinct_at.has_value());

    cfg.n_max = 2;
    std::vector<OffspringLaw> seq2{OffspringLaw::dirac(3), OffspringLaw::dirac(2)};
    const auto t2 = run_quenched(seq2, cfg, rng);
    CHECK(t2.z == std::vector<std::uint64_t>{1, 3, 6});
    CHECK(t2.log_pi[0] == 0.0);
    CHECK(t2.log_pi[1] == doctest::Approx(std::log(3.0)).epsilon(1e-14));
    CHECK(t2.log_pi[2] == doctest::Approx(std::log(6.0)).epsilon(1e-14));

    cfg.n_max = 3;
    CHECK_THROWS(run_quenched(seq2, cfg, rng));
}

TEST_CASE("quenched extinction probability oracle") {
    // per-generation survival 1/2 from a single line: P(extinct by 3) = 1 - 2^-3
    SimConfig cfg;
    cfg.n_max = 3;
    std::vector<OffspringLaw> seq(3, OffspringLaw::two_atom(0, 1, 0.5));
    const int n = 100000;
    int extinct = 0;
    for (int i = 0; i < n; ++i) {
        StreamRng rng(77, static_cast<std::uint64_t>(i));
        const auto t = run_quenched(seq, cfg, rng);
        extinct += t.extinct_at.has_value() ? 1 : 0;
        if (t.extinct_at) {
            // absorbing: everything after the extinction generation is zero
            for (std::size_t k = static_cast<std::size_t>(*t.extinct_at); k < t.z.size(); ++k) {
                CHECK(t.z[k] == 0);
                CHECK(t.w[k] == 0.0);
            }
        }
    }
    const double p = 1.0 - std::pow(2.0, -3.0);
    const double se = std::sqrt(p * (1.0 - p) / n);
    CHECK(std::abs(static_cast<double>(extinct) / n - p) <= 4.0 * se);
}

TEST_CASE("run_annealed is deterministic and reduces to quenched for one state") {
    SimConfig cfg;
    cfg.n_max = 12;
    cfg.seed = 99;
    const auto env = two_point_env();
    const auto a = run_annealed(env, cfg, 5);
    const auto b = run_annealed(env, cfg, 5);
    CHECK(a.z == b.z);
    CHECK(a.w == b.w);
    CHECK(a.env_ids == b.env_ids);

    // single-state env: annealed and quenched consume identical randomness
    const auto single = EnvironmentLaw::single(OffspringLaw::geometric(2.0 / 3.0));
    const auto ta = run_annealed(single, cfg, 3);
    StreamRng rng(cfg.seed, 3);
    std::vector<OffspringLaw> seq(12, OffspringLaw::geometric(2.0 / 3.0));
    const auto tq = run_quenched(seq, cfg, rng);
    CHECK(ta.z == tq.z);
    CHECK(ta.w == tq.w);
}

TEST_CASE("batch martingale property and survivor counts") {
    SimConfig cfg;
    cfg.n_max = 10;
    cfg.seed = 2024;
    const auto env = two_point_env();
    const int collect[] = {1, 5, 10};
    const auto res = batch(env, cfg, 100000, collect, 2);
    for (std::size_t ci = 0; ci < res.collect_at.size(); ++ci) {
        const auto& st = res.w_stats[ci];
        CHECK_MESSAGE(std::abs(st.mean - 1.0) <= 4.0 * st.se,
                      "n=", res.collect_at[ci], " mean=", st.mean, " se=", st.se);
    }
    // survivors shrink with n
    CHECK(res.survivors[0] >= res.survivors[1]);
    CHECK(res.survivors[1] >= res.survivors[2]);
    // w_star dominates w and is nondecreasing across collect points
    for (std::size_t t = 0; t < 200; ++t) {
        CHECK(res.w_star[2][t] >= res.w[2][t]);
        CHECK(res.w_star[2][t] >= res.w_star[1][t]);
    }
}

TEST_CASE("batch is thread-count invariant") {
    SimConfig cfg;
    cfg.n_max = 8;
    cfg.seed = 4242;
    const auto env = two_point_env();
    const int collect[] = {4, 8};
    const auto r1 = batch(env, cfg, 5000, collect, 1);
    const auto r4 = batch(env, cfg, 5000, collect, 4);
    CHECK(r1.w == r4.w);
    CHECK(r1.w_star == r4.w_star);
    CHECK(r1.survivors == r4.survivors);
}

TEST_CASE("batch survivor fraction matches the generating-function recursion") {
    // single-state TwoAtom(0,2,1/2): f(s) = 1/2 + s^2/2, q_{n+1} = f(q_n)
    const auto env = EnvironmentLaw::single(OffspringLaw::two_atom(0, 2, 0.5));
    SimConfig cfg;
    cfg.n_max = 10;
    cfg.seed = 31337;
    const int collect[] = {10};
    const std::size_t n = 100000;
    const auto res = batch(env, cfg, n, collect, 2);
    double q = 0.0;
    for (int i = 0; i < 10; ++i) q = 0.5 + 0.5 * q * q;
    const double p_surv = 1.0 - q;
    const double se = std::sqrt(p_surv * (1.0 - p_surv) / static_cast<double>(n));
    CHECK(std::abs(static_cast<double>(res.survivors[0]) / static_cast<double>(n) - p_surv) <=
          4.0 * se);
}

TEST_CASE("quenched mean tracks Pi") {
    // fixed sequence, E Z_n = Pi_n
    std::vector<OffspringLaw> seq(6, OffspringLaw::geometric(2.0 / 3.0));
    SimConfig cfg;
    cfg.n_max = 6;
    const int reps = 20000;
    std::vector<double> zs(reps);
    for (int i = 0; i < reps; ++i) {
        StreamRng rng(555, static_cast<std::uint64_t>(i));
        zs[static_cast<std::size_t>(i)] = static_cast<double>(run_quenched(seq, cfg, rng).z.back());
    }
    const auto st = mean_se(zs);
    CHECK(std::abs(st.mean - 64.0) <= 4.0 * st.se);
}

TEST_CASE("exact and auto modes agree on the two-point env") {
    const auto env = two_point_env();
    SimConfig exact;
    exact.n_max = 20;
    exact.seed = 7;
    exact.mode = SumMode::Exact;
    SimConfig aut = exact;
    aut.mode = SumMode::Auto;
    const int collect[] = {20};
    const auto re = batch(env, exact, 20000, collect, 2);
    const auto ra = batch(env, aut, 20000, collect, 2);
    const double se = std::hypot(re.w_stats[0].se, ra.w_stats[0].se);
    CHECK(std::abs(re.w_stats[0].mean - ra.w_stats[0].mean) <= 4.0 * se);
}

TEST_CASE("log-scale switch keeps W sane") {
    // mean-8 offspring reaches the (lowered) switch quickly
    const auto env = EnvironmentLaw::single(OffspringLaw::poisson(8.0));
    SimConfig cfg;
    cfg.n_max = 25;
    cfg.seed = 11;
    cfg.clt_threshold = 1000;
    cfg.log_scale_switch = 1e6;
    const auto t = run_annealed(env, cfg, 0);
    CHECK(t.switched_at > 0);
    CHECK(t.z.back() == kLogScaleMarker);
    CHECK(std::isfinite(t.w.back()));
    CHECK(t.w.back() > 0.0);
    // ln Z stays consistent: ln W + ln Pi, with ln Pi = n ln 8
    CHECK(t.log_pi.back() == doctest::Approx(25.0 * std::log(8.0)).epsilon(1e-12));
    CHECK(t.log_z(25) == doctest::Approx(std::log(t.w.back()) + 25.0 * std::log(8.0)).epsilon(1e-12));
    // W_n from the martingale band: mean 1, modest spread at these sizes
    const int collect[] = {25};
    const auto res = batch(env, cfg, 4000, collect, 2);
    CHECK(std::abs(res.w_stats[0].mean - 1.0) <= 4.0 * res.w_stats[0].se);
}

TEST_CASE("log_pi_large_dev") {
    // single state with mean 2 and b=0.9: Pi_n^{-1} = 2^{-n} < 0.9^n always
    const auto single = EnvironmentLaw::single(OffspringLaw::dirac(2));
    const auto r0 = log_pi_large_dev(single, 1, 0.9, 30, 2000, 2);
    for (double p : r0.prob) CHECK(p == 0.0);

    const auto env = two_point_env();
    CHECK_THROWS(log_pi_large_dev(env, 1, 0.5, 10, 100, 1));  // below exp(-E ln m0)
    const auto r = log_pi_large_dev(env, 12345, 0.8, 60, 200000, 2);
    CHECK(r.prob.size() == 60);
    // P(1) = P(m0 = 1/2) = 1/2
    CHECK(r.prob[0] == doctest::Approx(0.5).epsilon(0.02));
    // exact binomial oracle at n = 60: P(B < 0.44064 * 60), B ~ Bin(60, 1/2)
    double p60 = 0.0, term = std::pow(0.5, 60);
    for (int k = 0; k <= 26; ++k) {
        p60 += term;
        term *= static_cast<double>(60 - k) / static_cast<double>(k + 1);
    }
    const double se = std::sqrt(p60 * (1.0 - p60) / 200000.0);
    CHECK(std::abs(r.prob[59] - p60) <= 4.0 * se);
    // partial sums are nondecreasing and the late tail decays relative to the start
    CHECK(r.partial_sum[59] >= r.partial_sum[30]);
    CHECK(r.prob[59] < r.prob[0]);
    // thread invariance (integer counters merge exactly)
    const auto r2 = log_pi_large_dev(env, 12345, 0.8, 60, 200000, 5);
    CHECK(r.prob == r2.prob);
}

TEST_SUITE_END();
