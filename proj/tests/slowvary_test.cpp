#include "bprelab/slowvary.hpp"

#include "bprelab/numeric.hpp"
#include "bprelab/quadrature.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

using namespace bprelab;

TEST_SUITE_BEGIN("slowvary");

namespace {
constexpr double kE = std::numbers::e;

std::vector<SlowVarying> ell_menu() {
    return {
        SlowVarying::one(),
        SlowVarying::eps_power_log(1.0),
        SlowVarying::eps_decay(1.0, 1.0),
        SlowVarying::log_pow(1.0),
        SlowVarying::log_pow(-1.0),
        SlowVarying::log_e_plus_x(),
        SlowVarying::one_plus_log_plus(),
    };
}
}  // namespace

TEST_CASE("eval closed forms") {
    CHECK(SlowVarying::one()(12345.0) == 1.0);
    CHECK(SlowVarying::log_e_plus_x()(0.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(SlowVarying::log_pow(2.0)(std::exp(3.0)) == doctest::Approx(9.0).epsilon(1e-12));
    CHECK(SlowVarying::one_plus_log_plus()(0.5) == 1.0);
}

TEST_CASE("descriptor quadrature path matches the closed form") {
    // eps(t) = gamma/ln t integrates to gamma * ln ln x, so l = (ln x)^gamma
    for (double gamma : {1.0, -1.0, 2.0}) {
        const auto by_eps = SlowVarying::eps_power_log(gamma);
        const auto closed = SlowVarying::log_pow(gamma);
        for (double x : log_grid(3.0, 1e10, 40)) {
            CHECK(by_eps(x) == doctest::Approx(closed(x)).epsilon(1e-8));
        }
    }
    // the worked point: gamma=1 at x = e^e gives l = e
    CHECK(SlowVarying::eps_power_log(1.0)(std::exp(kE)) == doctest::Approx(kE).epsilon(1e-9));
}

TEST_CASE("custom form is probed") {
    CHECK_THROWS(SlowVarying::custom([](double x) { return x - 2.0; }, 1.0));  // negative values
    const auto ok = SlowVarying::custom([](double x) { return 2.0 + std::sin(std::log(1.0 + x)); }, 1.0);
    CHECK(ok(10.0) > 0.0);
    CHECK_THROWS(ok.epsilon(10.0));
}

TEST_CASE("slow variation: ratio drift decays at the right rate") {
    // |l(kx)/l(x) - 1| is O(ln k / ln x) for the log family, faster otherwise;
    // from x=1e5 to x=1e10 the drift must at least halve (0.6 with margin)
    for (const auto& ell : ell_menu()) {
        for (double lam : {0.5, 2.0, 10.0}) {
            const double r5 = std::abs(ell(lam * 1e5) / ell(1e5) - 1.0);
            const double r10 = std::abs(ell(lam * 1e10) / ell(1e10) - 1.0);
            CHECK_MESSAGE(r10 <= std::max(0.011, 0.6 * r5),
                          ell.name(), " lambda=", lam, " r5=", r5, " r10=", r10);
        }
    }
}

TEST_CASE("hat transform") {
    CHECK(SlowVarying::one().hat(0.5) == 0.0);
    CHECK(SlowVarying::log_e_plus_x().hat(1.0) == 0.0);
    CHECK(SlowVarying::one().hat(std::exp(2.0)) == doctest::Approx(2.0).epsilon(1e-12));
    // int_1^x (1+ln t)/t dt = ln x + ln^2 x / 2
    const auto opl = SlowVarying::one_plus_log_plus();
    CHECK(opl.hat(10.0) == doctest::Approx(4.9535341482332447).epsilon(1e-10));
    for (double x : log_grid(2.0, 1e8, 30)) {
        const double expect = std::log(x) + 0.5 * std::log(x) * std::log(x);
        CHECK(opl.hat(x) == doctest::Approx(expect).epsilon(1e-8));
    }
}

TEST_CASE("potter constants") {
    CHECK(SlowVarying::one().potter_constant(0.1, 1.0, 1e12) == doctest::Approx(1.01).epsilon(1e-12));

    const auto lex = SlowVarying::log_e_plus_x();
    const double c64 = lex.potter_constant(0.1, 1.0, 1e12, 64);
    const double c128 = lex.potter_constant(0.1, 1.0, 1e12, 128);
    CHECK(std::isfinite(c64));
    CHECK(std::abs(c128 - c64) <= 0.005 * c64);  // stable under grid doubling

    // decreasing form stays below the trivial bound on [e, 1e12]
    CHECK(SlowVarying::log_pow(-1.0).potter_constant(0.1, kE, 1e12) <= 1.01 + 1e-12);
}

TEST_CASE("weight function basics") {
    const WeightFn phi(2.0, SlowVarying::log_e_plus_x());
    CHECK(phi(0.0) == 0.0);
    CHECK(phi(3.0) == doctest::Approx(9.0 * std::log(kE + 3.0)).epsilon(1e-14));
    CHECK_THROWS(WeightFn(0.5, SlowVarying::one()));
    // strongly decreasing l makes x^alpha l(x) non-monotone near e for small alpha
    CHECK_THROWS(WeightFn(1.5, SlowVarying::log_pow(-2.0)));
}

TEST_CASE("shape certificate basics") {
    const auto grid = log_grid(1e-3, 1e9, 512);
    CHECK(shape_certificate([](double x) { return x * x; }, 1.0, grid, CertShape::Convex).pass);
    const auto fail = shape_certificate([](double x) { return std::sqrt(x); }, 1.0, grid, CertShape::Convex);
    CHECK_FALSE(fail.pass);
    CHECK(fail.witness[1] > 0.0);
    // x^2 under the sqrt transform is linear: boundary pass in both directions
    CHECK(shape_certificate([](double x) { return x * x; }, 2.0, grid, CertShape::Concave).pass);
    CHECK(shape_certificate([](double x) { return x * x; }, 2.0, grid, CertShape::Convex).pass);
    CHECK_THROWS(shape_certificate([](double x) { return x; }, 1.0, log_grid(1.0, 10.0, 16),
                                   CertShape::Convex));
}

TEST_CASE("corrected convex weight: constant l reproduces the power") {
    const CorrectedConvexWeight phi1(WeightFn(2.0, SlowVarying::one()), 1.5);
    for (double x : log_grid(1e-3, 1e8, 24)) {
        CHECK(phi1(x) == doctest::Approx(x * x).epsilon(1e-9));
    }
}

TEST_CASE("corrected convex weight: symbolic oracle for l = 1 + ln+ x") {
    // beyond the threshold: phi1(x) = x^alpha (1 + ln x - 1/alpha) + a^alpha / alpha
    const double alpha = 2.0;
    const CorrectedConvexWeight phi1(WeightFn(alpha, SlowVarying::one_plus_log_plus()), 1.5);
    const double a = phi1.threshold();
    REQUIRE(a >= 1.0);
    for (double x : log_grid(2.0 * a, 1e8, 24)) {
        const double expect =
            std::pow(x, alpha) * (1.0 + std::log(x) - 1.0 / alpha) + std::pow(a, alpha) / alpha;
        CHECK(phi1(x) == doctest::Approx(expect).epsilon(1e-9));
    }
}

TEST_CASE("corrected convex weight: continuity and asymptotic ratio") {
    for (const auto& ell : {SlowVarying::log_e_plus_x(), SlowVarying::log_pow(1.0),
                            SlowVarying::log_pow(-1.0), SlowVarying::eps_decay(1.0, 1.0)}) {
        const double alpha = 2.0;
        const WeightFn phi(alpha, ell);
        const CorrectedConvexWeight phi1(phi, 1.5);
        const double a = phi1.threshold();
        // continuity at the threshold
        CHECK(phi1(a * (1.0 + 1e-12)) == doctest::Approx(phi1(a)).epsilon(1e-10));
        // phi1/phi -> 1 like 1 - eps(x)/alpha; check against the measured eps
        const double x = 1e8;
        const double gap = phi1(x) / phi(x) - 1.0;
        const double predicted = -ell.epsilon(x) / alpha;
        CHECK_MESSAGE(std::abs(gap - predicted) <= 0.2 * std::abs(predicted) + 1e-6,
                      ell.name(), " gap=", gap, " predicted=", predicted);
    }
}

TEST_CASE("corrected convex weight: high-precision quadrature oracle") {
    // independent single-interval integration at a tighter tolerance
    const double alpha = 2.0;
    const CorrectedConvexWeight phi1(WeightFn(alpha, SlowVarying::log_e_plus_x()), 1.5);
    const double a = phi1.threshold();
    for (double x : {1e2, 1e5, 1e8}) {
        const double direct = std::pow(a, alpha) * std::log(kE + a) +
                              alpha * integrate([](double t) { return t * std::log(kE + t); }, a, x, 1e-13);
        CHECK(phi1(x) == doctest::Approx(direct).epsilon(1e-9));
    }
}

TEST_CASE("corrected convex weight: convexity certificates over the test matrix") {
    const auto grid = log_grid(1e-3, 1e9, 512);
    for (const auto& ell : {SlowVarying::one(), SlowVarying::log_e_plus_x(), SlowVarying::log_pow(-1.0)}) {
        for (double alpha : {1.5, 2.0, 3.0}) {
            for (double beta : {1.25, 1.5, 2.0}) {
                if (!(beta < alpha)) continue;
                const CorrectedConvexWeight phi1(WeightFn(alpha, ell), beta);
                const auto direct =
                    shape_certificate([&](double x) { return phi1(x); }, 1.0, grid, CertShape::Convex);
                CHECK_MESSAGE(direct.pass, ell.name(), " alpha=", alpha, " beta=", beta,
                              " worst=", direct.worst, " at x=", direct.witness[1]);
                const auto transformed =
                    shape_certificate([&](double x) { return phi1(x); }, beta, grid, CertShape::Convex);
                CHECK_MESSAGE(transformed.pass, ell.name(), " alpha=", alpha, " beta=", beta,
                              " (x^{1/beta}) worst=", transformed.worst);
            }
        }
    }
}

TEST_CASE("corrected convex weight: threshold search failure is loud") {
    // eps = -0.2 x^{-0.05} decays slowly enough that alpha - beta + eps stays
    // negative everywhere below the probe cap when alpha - beta = 0.05
    const auto ell = SlowVarying::eps_decay(-0.2, 0.05);
    CHECK_THROWS_AS(CorrectedConvexWeight(WeightFn(1.5, ell), 1.45, 1e6), std::runtime_error);
}

TEST_CASE("corrected concave weight: closed-form constants for ln(e+x)") {
    const CorrectedConcaveWeight w(ConcaveEll::log_e_plus_x());
    CHECK(w.threshold() == 1.0);
    CHECK(w.c0() == doctest::Approx(1.0 / (kE + 1.0) - std::log(kE + 1.0)).epsilon(1e-12));
    CHECK(w.c0() == doctest::Approx(-1.0443202661482277).epsilon(1e-12));
    CHECK(w(1.0) == doctest::Approx(0.5 / (kE + 1.0)).epsilon(1e-12));
    CHECK(w(1.0) == doctest::Approx(0.13447071068499756).epsilon(1e-12));
    // l1 continuous at the threshold
    CHECK(w.ell1(1.0) == doctest::Approx(std::log(kE + 1.0) + w.c0()).epsilon(1e-12));
}

TEST_CASE("corrected concave weight: certificates over the concave menu") {
    const auto grid = log_grid(1e-3, 1e9, 512);
    for (const auto& ell : {ConcaveEll::log_e_plus_x(), ConcaveEll::one_plus_log1p(),
                            ConcaveEll::power(0.5)}) {
        const CorrectedConcaveWeight w(ell);
        const auto convex = shape_certificate([&](double x) { return w(x); }, 1.0, grid, CertShape::Convex);
        CHECK_MESSAGE(convex.pass, ell.name(), " phi1 convex, worst=", convex.worst);
        const auto sqrt_concave =
            shape_certificate([&](double x) { return w(x); }, 2.0, grid, CertShape::Concave);
        CHECK_MESSAGE(sqrt_concave.pass, ell.name(), " phi1(sqrt) concave, worst=", sqrt_concave.worst);

        // doubling constant: finite and stable under grid doubling
        double sup1 = 0.0, sup2 = 0.0;
        for (double x : log_grid(1e-3, 1e9, 512)) sup1 = std::max(sup1, w(2.0 * x) / w(x));
        for (double x : log_grid(1e-3, 1e9, 1024)) sup2 = std::max(sup2, w(2.0 * x) / w(x));
        CHECK(std::isfinite(sup1));
        CHECK(std::abs(sup2 - sup1) <= 0.005 * sup1);

        // l(2x) <= 3 l(x) for the concave increasing menu
        for (double x : log_grid(1e-3, 1e9, 256)) {
            CHECK(ell(2.0 * x) <= 3.0 * ell(x) + 1e-6);
        }
    }
}

TEST_CASE("corrected concave weight refuses a convex input") {
    CHECK_THROWS_AS(CorrectedConcaveWeight(ConcaveEll::custom(
                        [](double x) { return 1.0 + x * x; }, 0.0)),
                    std::invalid_argument);
}

TEST_CASE("tilde transform of the corrected weight") {
    const CorrectedConcaveWeight w(ConcaveEll::log_e_plus_x());
    CHECK(w.tilde(0.5) == 0.0);
    // cross-check against direct quadrature of l1(t)/t
    const double direct = integrate([&](double t) { return w.ell1(t) / t; }, 1.0, 100.0, 1e-12);
    CHECK(w.tilde(100.0) == doctest::Approx(direct).epsilon(1e-9));
}

TEST_CASE("concave equivalent of a nondecreasing slowly varying l") {
    const auto ell = SlowVarying::log_pow(1.0);
    const auto l1 = concave_equivalent(ell);
    // accepted by the concave correction and comparable to l at large x
    const CorrectedConcaveWeight w(l1);
    const double x = 1e6;
    const double ratio = l1(x) / ell(x);
    CHECK(ratio > 0.2);
    CHECK(ratio < 5.0);
    CHECK(w(10.0) > 0.0);
}

TEST_SUITE_END();
