#include "bprelab/slowvary.hpp"

#include "bprelab/numeric.hpp"
#include "bprelab/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace bprelab {

namespace {

constexpr double kE = std::numbers::e;

// descriptor caches span this range; evaluation beyond integrates a remainder
constexpr double kCacheTop = 4e10;
constexpr int kNodesPerDecadeEll = 16;

}  // namespace

// ---------------------------------------------------------------------------
// SlowVarying

SlowVarying SlowVarying::one() {
    SlowVarying l;
    l.kind_ = Kind::One;
    return l;
}

SlowVarying SlowVarying::constant(double c) {
    if (!(c > 0.0)) throw std::invalid_argument("SlowVarying: constant must be > 0");
    SlowVarying l;
    l.kind_ = Kind::Const;
    l.c_ = c;
    return l;
}

SlowVarying SlowVarying::eps_power_log(double gamma) {
    SlowVarying l;
    l.kind_ = Kind::EpsPowerLog;
    l.gamma_ = gamma;
    l.a0_ = kE;
    l.build_descriptor_cache();
    return l;
}

SlowVarying SlowVarying::eps_decay(double gamma, double r) {
    if (!(r > 0.0)) throw std::invalid_argument("SlowVarying: decay rate must be > 0");
    SlowVarying l;
    l.kind_ = Kind::EpsDecay;
    l.gamma_ = gamma;
    l.r_ = r;
    l.a0_ = 1.0;
    l.build_descriptor_cache();
    return l;
}

SlowVarying SlowVarying::log_pow(double gamma) {
    SlowVarying l;
    l.kind_ = Kind::LogPow;
    l.gamma_ = gamma;
    l.a0_ = kE;
    return l;
}

SlowVarying SlowVarying::log_e_plus_x() {
    SlowVarying l;
    l.kind_ = Kind::LogEPlusX;
    l.a0_ = 0.0;
    return l;
}

SlowVarying SlowVarying::one_plus_log_plus() {
    SlowVarying l;
    l.kind_ = Kind::OnePlusLogPlus;
    l.a0_ = 1.0;
    return l;
}

SlowVarying SlowVarying::custom(std::function<double(double)> fn, double a0) {
    if (!(a0 >= 0.0)) throw std::invalid_argument("SlowVarying: a0 must be >= 0");
    SlowVarying l;
    l.kind_ = Kind::Custom;
    l.fn_ = std::move(fn);
    l.a0_ = a0;
    // positivity / boundedness-on-compacts probe
    for (double x : log_grid(std::max(a0, 1e-6), 1e12, 256)) {
        const double v = l.fn_(x);
        if (!(v > 0.0) || !std::isfinite(v)) {
            std::ostringstream msg;
            msg << "SlowVarying::custom: probe failed at x=" << x << " (value " << v << ")";
            throw std::invalid_argument(msg.str());
        }
    }
    return l;
}

void SlowVarying::build_descriptor_cache() {
    // epsilon must decay: the closed descriptor forms guarantee it, but we
    // still probe so that bad parameters fail loudly at construction
    const double e10 = std::abs(epsilon(10.0 * std::max(a0_, 1.0)));
    const double e9 = std::abs(epsilon(1e9));
    const double e12 = std::abs(epsilon(1e12));
    if (!(e9 < e10 + 1e-9) || !(e12 <= 0.5 * e10 + 1e-9)) {
        throw std::invalid_argument("SlowVarying: epsilon does not decay on the probe grid");
    }

    const double u0 = std::log(a0_);
    const double du = std::numbers::ln10 / kNodesPerDecadeEll;
    const int count = static_cast<int>(std::ceil((std::log(kCacheTop) - u0) / du)) + 1;
    auto nodes = std::make_shared<std::vector<double>>(static_cast<std::size_t>(count));
    double acc = 0.0;
    (*nodes)[0] = 0.0;
    for (int j = 1; j < count; ++j) {
        const double ua = u0 + (j - 1) * du;
        const double ub = u0 + j * du;
        acc += integrate([this](double u) { return epsilon(std::exp(u)); }, ua, ub);
        (*nodes)[static_cast<std::size_t>(j)] = acc;
    }
    nodes_ = std::move(nodes);
    node_u0_ = u0;
    node_du_ = du;
}

double SlowVarying::eps_integral_to(double x) const {
    const double u = std::log(x);
    if (u <= node_u0_) return 0.0;
    const auto& nodes = *nodes_;
    std::size_t j = static_cast<std::size_t>((u - node_u0_) / node_du_);
    j = std::min(j, nodes.size() - 1);
    const double uj = node_u0_ + static_cast<double>(j) * node_du_;
    return nodes[j] + integrate([this](double v) { return epsilon(std::exp(v)); }, uj, u);
}

double SlowVarying::operator()(double x) const {
    if (!(x >= 0.0)) throw std::invalid_argument("SlowVarying: x must be >= 0");
    switch (kind_) {
        case Kind::One:
            return 1.0;
        case Kind::Const:
            return c_;
        case Kind::EpsPowerLog:
        case Kind::EpsDecay:
            return x <= a0_ ? 1.0 : std::exp(eps_integral_to(x));
        case Kind::LogPow:
            return x <= kE ? 1.0 : std::pow(std::log(x), gamma_);
        case Kind::LogEPlusX:
            return std::log(kE + x);
        case Kind::OnePlusLogPlus:
            return 1.0 + ln_plus(x);
        case Kind::Custom:
            return fn_(x);
    }
    return 1.0;
}

double SlowVarying::epsilon(double x) const {
    switch (kind_) {
        case Kind::One:
        case Kind::Const:
            return 0.0;
        case Kind::EpsPowerLog:
        case Kind::LogPow:
            return x <= a0_ ? 0.0 : gamma_ / std::log(x);
        case Kind::EpsDecay:
            return x <= a0_ ? 0.0 : gamma_ * std::pow(x, -r_);
        case Kind::LogEPlusX:
            return x <= 0.0 ? 0.0 : x / ((kE + x) * std::log(kE + x));
        case Kind::OnePlusLogPlus:
            return x <= 1.0 ? 0.0 : 1.0 / (1.0 + std::log(x));
        case Kind::Custom:
            throw std::logic_error("SlowVarying: no analytic epsilon for a custom form");
    }
    return 0.0;
}

double SlowVarying::hat(double x) const {
    if (x <= 1.0) return 0.0;
    if (is_constant()) return c_ * std::log(x);
    const double top = std::log(x);
    // integrate l(e^u) du over [0, ln x], splitting at the known kink
    const auto f = [this](double u) { return (*this)(std::exp(u)); };
    double kink = 0.0;
    if (kind_ == Kind::LogPow || kind_ == Kind::EpsPowerLog) kink = 1.0;  // u = ln(e)
    if (kink > 0.0 && top > kink) return integrate(f, 0.0, kink) + integrate(f, kink, top);
    return integrate(f, 0.0, top);
}

double SlowVarying::potter_constant(double delta, double x_min, double x_max,
                                    int pts_per_decade) const {
    if (!(delta > 0.0)) throw std::invalid_argument("potter_constant: delta must be > 0");
    if (!(x_min >= 1.0 && x_max > x_min)) {
        throw std::invalid_argument("potter_constant: need 1 <= x_min < x_max");
    }
    const double decades = std::log10(x_max / x_min);
    const int points = std::max(2, static_cast<int>(std::ceil(decades * pts_per_decade)) + 1);
    double sup = 0.0;
    for (double x : log_grid(x_min, x_max, points)) {
        const double bound = std::max(std::pow(x, delta), std::pow(x, -delta));
        sup = std::max(sup, (*this)(x) / bound);
    }
    return 1.01 * sup;
}

std::string SlowVarying::name() const {
    std::ostringstream s;
    switch (kind_) {
        case Kind::One: s << "1"; break;
        case Kind::Const: s << c_; break;
        case Kind::EpsPowerLog: s << "exp-int(gamma/ln t), gamma=" << gamma_; break;
        case Kind::EpsDecay: s << "exp-int(gamma t^-r), gamma=" << gamma_ << ", r=" << r_; break;
        case Kind::LogPow: s << "(ln x)^" << gamma_; break;
        case Kind::LogEPlusX: s << "ln(e+x)"; break;
        case Kind::OnePlusLogPlus: s << "1+ln+x"; break;
        case Kind::Custom: s << "custom"; break;
    }
    return s.str();
}

// ---------------------------------------------------------------------------
// WeightFn

WeightFn::WeightFn(double alpha_, SlowVarying ell_) : alpha(alpha_), ell(std::move(ell_)) {
    if (!(alpha >= 1.0)) throw std::invalid_argument("WeightFn: alpha must be >= 1");
    // nondecreasing probe over the supported menu
    double prev = 0.0;
    for (double x : log_grid(1e-6, 1e10, 128)) {
        const double v = (*this)(x);
        if (v < prev * (1.0 - 1e-12)) {
            std::ostringstream msg;
            msg << "WeightFn: x^" << alpha << " * " << ell.name() << " decreases near x=" << x;
            throw std::invalid_argument(msg.str());
        }
        prev = v;
    }
}

double WeightFn::operator()(double x) const {
    if (x <= 0.0) return 0.0;
    return std::pow(x, alpha) * ell(x);
}

std::string WeightFn::name() const {
    std::ostringstream s;
    s << "x^" << alpha;
    if (!ell.is_constant()) s << " * " << ell.name();
    return s.str();
}

// ---------------------------------------------------------------------------
// certificates

CertificateReport shape_certificate(const std::function<double(double)>& f, double inv_power,
                                    const std::vector<double>& grid, CertShape shape, double tol) {
    if (grid.size() < 256) throw std::invalid_argument("shape_certificate: need >= 256 grid points");
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (!(grid[i] > grid[i - 1])) {
            throw std::invalid_argument("shape_certificate: grid must be strictly increasing");
        }
    }
    const auto g = [&](double x) { return inv_power == 1.0 ? f(x) : f(std::pow(x, 1.0 / inv_power)); };

    CertificateReport rep;
    rep.points = static_cast<int>(grid.size());
    std::vector<double> vals(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) vals[i] = g(grid[i]);

    double worst_viol = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 2 < grid.size(); ++i) {
        const double x1 = grid[i], x2 = grid[i + 1], x3 = grid[i + 2];
        const double chord = vals[i] + (vals[i + 2] - vals[i]) * (x2 - x1) / (x3 - x1);
        const double scale = std::max({std::abs(vals[i]), std::abs(vals[i + 1]),
                                       std::abs(vals[i + 2]), 1e-300});
        // slack > 0 means "above the chord"; a violation is above-chord for a
        // convex claim, below-chord for a concave one
        const double slack = (vals[i + 1] - chord) / scale;
        const double viol = shape == CertShape::Convex ? slack : -slack;
        if (viol > worst_viol) {
            worst_viol = viol;
            rep.worst = slack;
            rep.witness[0] = x1;
            rep.witness[1] = x2;
            rep.witness[2] = x3;
        }
        if (viol > tol) rep.pass = false;
    }
    return rep;
}

// ---------------------------------------------------------------------------
// CorrectedConvexWeight (lemma-3.1 style)

CorrectedConvexWeight::CorrectedConvexWeight(const WeightFn& phi, double beta, double probe_cap)
    : alpha_(phi.alpha), beta_(beta), ell_(phi.ell) {
    if (!(alpha_ > 1.0)) throw std::invalid_argument("CorrectedConvexWeight: alpha must be > 1");
    if (!(beta > 1.0 && beta <= 2.0 && beta < alpha_)) {
        throw std::invalid_argument("CorrectedConvexWeight: beta must be in (1,2] and < alpha");
    }
    if (!ell_.has_epsilon()) {
        throw std::invalid_argument("CorrectedConvexWeight: l needs an analytic epsilon");
    }

    // least probe point past which alpha - beta + eps stays positive, doubled
    const double start = std::max(1.0, ell_.a0());
    std::vector<double> probes;
    for (double x = start; x <= probe_cap; x *= std::pow(2.0, 0.125)) probes.push_back(x);
    std::size_t first_ok = probes.size();
    for (std::size_t i = probes.size(); i-- > 0;) {
        if (alpha_ - beta_ + ell_.epsilon(probes[i]) > 0.0) {
            first_ok = i;
        } else {
            break;
        }
    }
    if (first_ok == probes.size()) {
        std::ostringstream msg;
        msg << "CorrectedConvexWeight: alpha-beta+eps(x) never stays positive below " << probe_cap
            << " (l = " << ell_.name() << ")";
        throw std::runtime_error(msg.str());
    }
    a_ = 2.0 * probes[first_ok];
    ell_a_ = ell_(a_);

    // cumulative alpha * int_a^x t^{alpha-1} l(t) dt on a geometric node grid
    const int per_decade = 64;
    const double top = 4e9;
    node_lx0_ = std::log(a_);
    node_dlx_ = std::numbers::ln10 / per_decade;
    const int count =
        std::max(2, static_cast<int>(std::ceil((std::log(top) - node_lx0_) / node_dlx_)) + 1);
    auto nodes = std::make_shared<std::vector<double>>(static_cast<std::size_t>(count));
    const auto integrand = [this](double t) { return std::pow(t, alpha_ - 1.0) * ell_(t); };
    double acc = 0.0;
    (*nodes)[0] = 0.0;
    for (int j = 1; j < count; ++j) {
        const double xa = std::exp(node_lx0_ + (j - 1) * node_dlx_);
        const double xb = std::exp(node_lx0_ + j * node_dlx_);
        acc += alpha_ * integrate(integrand, xa, xb);
        (*nodes)[static_cast<std::size_t>(j)] = acc;
    }
    nodes_ = std::move(nodes);
}

double CorrectedConvexWeight::outer_integral(double x) const {
    const double lx = std::log(x);
    const auto& nodes = *nodes_;
    std::size_t j = lx <= node_lx0_
                        ? 0
                        : std::min(static_cast<std::size_t>((lx - node_lx0_) / node_dlx_),
                                   nodes.size() - 1);
    const double xj = std::exp(node_lx0_ + static_cast<double>(j) * node_dlx_);
    const auto integrand = [this](double t) { return std::pow(t, alpha_ - 1.0) * ell_(t); };
    return nodes[j] + alpha_ * integrate(integrand, xj, x);
}

double CorrectedConvexWeight::operator()(double x) const {
    if (x <= 0.0) return 0.0;
    if (x <= a_) return std::pow(x, alpha_) * ell_a_;
    return std::pow(a_, alpha_) * ell_a_ + outer_integral(x);
}

double CorrectedConvexWeight::ell1(double x) const {
    if (x <= 0.0 || x <= a_) return ell_a_;
    return (*this)(x) / std::pow(x, alpha_);
}

// ---------------------------------------------------------------------------
// ConcaveEll

ConcaveEll ConcaveEll::log_e_plus_x() {
    ConcaveEll l;
    l.kind_ = Kind::LogEPlusX;
    return l;
}

ConcaveEll ConcaveEll::one_plus_log1p() {
    ConcaveEll l;
    l.kind_ = Kind::OnePlusLog1p;
    return l;
}

ConcaveEll ConcaveEll::power(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("ConcaveEll::power: p must be in (0,1)");
    ConcaveEll l;
    l.kind_ = Kind::Power;
    l.p_ = p;
    return l;
}

ConcaveEll ConcaveEll::custom(std::function<double(double)> fn, double a0) {
    ConcaveEll l;
    l.kind_ = Kind::Custom;
    l.fn_ = std::move(fn);
    l.a0_ = a0;
    return l;
}

double ConcaveEll::operator()(double x) const {
    switch (kind_) {
        case Kind::LogEPlusX: return std::log(kE + x);
        case Kind::OnePlusLog1p: return 1.0 + std::log1p(x);
        case Kind::Power: return std::pow(x, p_);
        case Kind::Custom: return fn_(x);
    }
    return 0.0;
}

double ConcaveEll::deriv(double x) const {
    switch (kind_) {
        case Kind::LogEPlusX: return 1.0 / (kE + x);
        case Kind::OnePlusLog1p: return 1.0 / (1.0 + x);
        case Kind::Power: return p_ * std::pow(x, p_ - 1.0);
        case Kind::Custom: {
            const double h = 1e-6 * std::max(x, 1.0);
            return (fn_(x + h) - fn_(std::max(x - h, 0.0))) / (h + std::min(x, h));
        }
    }
    return 0.0;
}

double ConcaveEll::antideriv(double x) const {
    if (x <= 0.0) return 0.0;
    switch (kind_) {
        case Kind::LogEPlusX: return (kE + x) * std::log(kE + x) - x - kE;
        case Kind::OnePlusLog1p: return (1.0 + x) * std::log1p(x);
        case Kind::Power: return std::pow(x, p_ + 1.0) / (p_ + 1.0);
        case Kind::Custom: return integrate(fn_, 0.0, x, 1e-9);
    }
    return 0.0;
}

double ConcaveEll::hat(double x) const {
    if (x <= 1.0) return 0.0;
    if (kind_ == Kind::Power) return (std::pow(x, p_) - 1.0) / p_;
    return integrate([this](double u) { return (*this)(std::exp(u)); }, 0.0, std::log(x));
}

bool ConcaveEll::slowly_varying() const { return kind_ != Kind::Power; }

std::string ConcaveEll::name() const {
    switch (kind_) {
        case Kind::LogEPlusX: return "ln(e+x)";
        case Kind::OnePlusLog1p: return "1+ln(1+x)";
        case Kind::Power: {
            std::ostringstream s;
            s << "x^" << p_;
            return s.str();
        }
        case Kind::Custom: return "custom";
    }
    return "";
}

// ---------------------------------------------------------------------------
// CorrectedConcaveWeight (lemma-3.2 style)

CorrectedConcaveWeight::CorrectedConcaveWeight(ConcaveEll ell) : ell_(std::move(ell)) {
    a_ = std::max(1.0, 2.0 * ell_.a0());

    // refuse inputs that fail the concavity probe beyond a0
    const auto probe = shape_certificate([this](double x) { return ell_(x); }, 1.0,
                                         log_grid(std::max(ell_.a0(), 1e-3), 1e9, 512),
                                         CertShape::Concave);
    if (!probe.pass) {
        std::ostringstream msg;
        msg << "CorrectedConcaveWeight: " << ell_.name() << " fails the concavity probe near x="
            << probe.witness[1] << " (slack " << probe.worst << ")";
        throw std::invalid_argument(msg.str());
    }
    // positive and increasing (wide sense) on the probe grid
    double prev = 0.0;
    for (double x : log_grid(1e-6, 1e9, 128)) {
        const double v = ell_(x);
        if (v < 0.0 || v < prev * (1.0 - 1e-12)) {
            throw std::invalid_argument("CorrectedConcaveWeight: l must be positive and increasing");
        }
        prev = v;
    }

    slope_ = ell_.deriv(a_);
    if (!(slope_ > 0.0)) {
        throw std::invalid_argument("CorrectedConcaveWeight: l'(a) must be positive");
    }
    c0_ = slope_ * a_ - ell_(a_);
}

double CorrectedConcaveWeight::ell1(double x) const {
    if (x <= 0.0) return 0.0;
    if (x <= a_) return slope_ * x;
    return ell_(x) + c0_;
}

double CorrectedConcaveWeight::operator()(double x) const {
    if (x <= 0.0) return 0.0;
    if (x <= a_) return 0.5 * slope_ * x * x;
    return 0.5 * slope_ * a_ * a_ + (ell_.antideriv(x) - ell_.antideriv(a_)) + c0_ * (x - a_);
}

double CorrectedConcaveWeight::tilde(double x) const {
    if (x <= 1.0) return 0.0;
    const auto f = [this](double t) { return ell1(t) / t; };
    if (x <= a_) return integrate(f, 1.0, x);
    return integrate(f, 1.0, a_) + integrate(f, a_, x);
}

// ---------------------------------------------------------------------------

ConcaveEll concave_equivalent(const SlowVarying& ell) {
    if (!ell.has_epsilon()) {
        throw std::invalid_argument("concave_equivalent: l needs an analytic epsilon");
    }
    // l'(x) = l(x) eps(x) / x; psi = running inf of l' from 1; l1 = int_0^x psi.
    // The inf is taken where the representation is live (strictly above a0:
    // below it l extends as a constant and l' degenerates to 0).
    const auto deriv = [ell](double x) { return ell(x) * ell.epsilon(x) / x; };
    const double start = std::max(1.0, ell.a0()) * (1.0 + 1e-9);
    auto grid = log_grid(start, 1e10, 512);
    auto psi = std::make_shared<std::vector<double>>(grid.size());
    auto cum = std::make_shared<std::vector<double>>(grid.size());
    double run = deriv(grid[0]);
    double acc = run * grid[0];  // int_0^{x0} psi with psi constant below the grid
    for (std::size_t i = 0; i < grid.size(); ++i) {
        run = std::min(run, deriv(grid[i]));
        (*psi)[i] = run;
        // segment (g[i-1], g[i]) carries the right-endpoint slope so that the
        // piecewise-linear l1 stays continuous and its slopes nonincreasing
        if (i > 0) acc += (*psi)[i] * (grid[i] - grid[i - 1]);
        (*cum)[i] = acc;
    }
    auto grid_ptr = std::make_shared<std::vector<double>>(std::move(grid));
    const auto l1 = [grid_ptr, psi, cum](double x) {
        const auto& g = *grid_ptr;
        if (x <= 0.0) return 0.0;
        if (x <= g.front()) return (*psi)[0] * x;
        const auto it = std::upper_bound(g.begin(), g.end(), x);
        const std::size_t j =
            std::min(static_cast<std::size_t>(it - g.begin()) - 1, g.size() - 2);
        return (*cum)[j] + (*psi)[j + 1] * (x - g[j]);
    };
    return ConcaveEll::custom(l1, start);
}

}  // namespace bprelab
