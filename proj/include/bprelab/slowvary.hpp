#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace bprelab {

// Slowly varying function given either by an epsilon-descriptor under the
// canonical representation l(x) = exp(int_{a0}^x eps(t)/t dt) (with c == 1),
// or by a closed form from a small menu. Values below a0 extend as the
// constant l(a0). Immutable; descriptor kinds carry a cumulative-integral
// node cache built at construction, so evaluation is pure and shareable.
class SlowVarying {
public:
    enum class Kind {
        One,            // l == 1
        Const,          // l == c
        EpsPowerLog,    // eps(t) = gamma/ln t for t >= e  (=> l = (ln x)^gamma)
        EpsDecay,       // eps(t) = gamma * t^-r           (=> l bounded)
        LogPow,         // closed form (ln x)^gamma for x >= e, constant below
        LogEPlusX,      // ln(e + x)
        OnePlusLogPlus, // 1 + ln+ x
        Custom,         // user closed form, positivity/boundedness probed
    };

    static SlowVarying one();
    static SlowVarying constant(double c);
    static SlowVarying eps_power_log(double gamma);
    static SlowVarying eps_decay(double gamma, double r);
    static SlowVarying log_pow(double gamma);
    static SlowVarying log_e_plus_x();
    static SlowVarying one_plus_log_plus();
    static SlowVarying custom(std::function<double(double)> fn, double a0);

    double operator()(double x) const;

    // eps(x) = x l'(x) / l(x); analytic for every kind except Custom
    double epsilon(double x) const;
    bool has_epsilon() const { return kind_ != Kind::Custom; }

    // int_1^x l(t)/t dt for x > 1, 0 otherwise; adaptive quadrature with a
    // closed-form fast path only for constant l
    double hat(double x) const;

    // grid certificate (not a proof): sup of l(x)/max(x^d, x^-d) over a
    // geometric grid of >= pts_per_decade points per decade, inflated by 1%
    double potter_constant(double delta, double x_min, double x_max,
                           int pts_per_decade = 64) const;

    double a0() const { return a0_; }
    Kind kind() const { return kind_; }
    bool is_constant() const { return kind_ == Kind::One || kind_ == Kind::Const; }
    std::string name() const;

private:
    SlowVarying() = default;
    void build_descriptor_cache();
    double eps_integral_to(double x) const;

    Kind kind_ = Kind::One;
    double c_ = 1.0;
    double gamma_ = 0.0;
    double r_ = 0.0;
    double a0_ = 1.0;
    std::function<double(double)> fn_;
    std::shared_ptr<const std::vector<double>> nodes_;  // cumulative integral at u = ln x grid
    double node_u0_ = 0.0;
    double node_du_ = 0.0;
};

// weight phi(x) = x^alpha * l(x), alpha >= 1; monotonicity probed at construction
struct WeightFn {
    double alpha;
    SlowVarying ell;

    WeightFn(double alpha_, SlowVarying ell_);
    double operator()(double x) const;
    std::string name() const;
};

// ---------------------------------------------------------------------------
// shape certificates

enum class CertShape { Convex, Concave };

struct CertificateReport {
    bool pass = true;
    double worst = 0.0;          // most negative (convex) / positive (concave) normalized slack
    double witness[3] = {0, 0, 0};
    int points = 0;
};

// Chord test for x -> f(x^{1/inv_power}) on a strictly increasing grid
// (>= 256 points): convexity requires f(mid) <= chord + tol*scale on every
// consecutive triple, concavity the reverse. Handles uneven (log) spacing.
CertificateReport shape_certificate(const std::function<double(double)>& f, double inv_power,
                                    const std::vector<double>& grid, CertShape shape,
                                    double tol = 1e-9);

// ---------------------------------------------------------------------------
// corrected weights

// Convexified weight: x^alpha * l(a) on [0,a], continuously matched
// alpha * int t^{alpha-1} l(t) dt beyond. The threshold a is the least probe
// point past which alpha - beta + eps(x) stays positive, then doubled.
// Both phi1 and phi1(x^{1/beta}) are convex on [0, inf).
class CorrectedConvexWeight {
public:
    CorrectedConvexWeight(const WeightFn& phi, double beta, double probe_cap = 1e9);

    double operator()(double x) const;
    double threshold() const { return a_; }
    double beta() const { return beta_; }
    double alpha() const { return alpha_; }
    double ell1(double x) const;  // phi1(x) / x^alpha, positive everywhere

private:
    double outer_integral(double x) const;  // alpha * int_a^x t^{alpha-1} l(t) dt

    double alpha_;
    double beta_;
    SlowVarying ell_;
    double a_ = 1.0;
    double ell_a_ = 1.0;
    std::shared_ptr<const std::vector<double>> nodes_;
    double node_lx0_ = 0.0;
    double node_dlx_ = 0.0;
};

// Positive increasing function, concave on (a0, inf): the admissible inputs
// of the concave correction.
class ConcaveEll {
public:
    enum class Kind { LogEPlusX, OnePlusLog1p, Power, Custom };

    static ConcaveEll log_e_plus_x();
    static ConcaveEll one_plus_log1p();           // smoothed 1 + ln+ x
    static ConcaveEll power(double p);            // x^p, p in (0,1); not slowly varying
    static ConcaveEll custom(std::function<double(double)> fn, double a0);

    double operator()(double x) const;
    double deriv(double x) const;
    double antideriv(double x) const;  // int_0^x l(t) dt
    double hat(double x) const;        // int_1^x l(t)/t dt, 0 for x <= 1
    bool slowly_varying() const;
    double a0() const { return a0_; }
    Kind kind() const { return kind_; }
    std::string name() const;

private:
    Kind kind_ = Kind::LogEPlusX;
    double p_ = 0.5;
    double a0_ = 0.0;
    std::function<double(double)> fn_;
};

// Concave-compatible correction: l1(x) = l'(a) x on [0,a], l(x) + c0 beyond,
// with c0 = l'(a) a - l(a) and a = max(1, 2 a0); phi1 = int_0^x l1. phi1 is
// convex increasing, phi1(x^{1/2}) concave, and phi1(2x) <= c phi1(x).
// Refuses an l that fails the concavity probe.
class CorrectedConcaveWeight {
public:
    explicit CorrectedConcaveWeight(ConcaveEll ell);

    double operator()(double x) const;  // phi1
    double ell1(double x) const;
    double threshold() const { return a_; }
    double c0() const { return c0_; }
    const ConcaveEll& ell() const { return ell_; }

    // tilde transform int_1^x phi1'(t)/t dt (0 for x <= 1)
    double tilde(double x) const;

private:
    ConcaveEll ell_;
    double a_ = 1.0;
    double slope_ = 0.0;  // l'(a)
    double c0_ = 0.0;
};

// Concave equivalent of a nondecreasing slowly varying l with slowly varying
// x l'(x): l1(x) = int_0^x psi with psi(t) = inf of l' over [1, t]. Feeds
// CorrectedConcaveWeight.
ConcaveEll concave_equivalent(const SlowVarying& ell);

}  // namespace bprelab
