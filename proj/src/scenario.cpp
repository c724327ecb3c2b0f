#include "bprelab/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

namespace bprelab {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ScenarioError(path + ": " + what);
}

void reject_unknown(const json& j, const std::vector<std::string>& allowed, const std::string& path) {
    for (const auto& [key, _] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            fail(path + "/" + key, "unknown key");
        }
    }
}

double get_num(const json& j, const std::string& key, const std::string& path) {
    if (!j.contains(key)) fail(path, "missing required key '" + key + "'");
    if (!j[key].is_number()) fail(path + "/" + key, "expected a number");
    return j[key].get<double>();
}

double get_num_or(const json& j, const std::string& key, double fallback) {
    return j.contains(key) ? j[key].get<double>() : fallback;
}

OffspringLaw parse_law(const json& j, const std::string& path) {
    if (!j.is_object() || !j.contains("family")) fail(path, "law needs a 'family'");
    const std::string fam = j["family"].get<std::string>();
    if (fam == "dirac") {
        reject_unknown(j, {"family", "k"}, path);
        return OffspringLaw::dirac(static_cast<std::uint64_t>(get_num(j, "k", path)));
    }
    if (fam == "two_atom") {
        reject_unknown(j, {"family", "a", "b", "q"}, path);
        return OffspringLaw::two_atom(static_cast<std::uint64_t>(get_num(j, "a", path)),
                                      static_cast<std::uint64_t>(get_num(j, "b", path)),
                                      get_num(j, "q", path));
    }
    if (fam == "geometric") {
        reject_unknown(j, {"family", "p"}, path);
        return OffspringLaw::geometric(get_num(j, "p", path));
    }
    if (fam == "poisson") {
        reject_unknown(j, {"family", "lambda"}, path);
        return OffspringLaw::poisson(get_num(j, "lambda", path));
    }
    if (fam == "table") {
        reject_unknown(j, {"family", "pmf"}, path);
        if (!j.contains("pmf") || !j["pmf"].is_array()) fail(path, "table law needs a 'pmf' array");
        return OffspringLaw::table(j["pmf"].get<std::vector<double>>());
    }
    if (fam == "zeta_log") {
        reject_unknown(j, {"family", "k_max"}, path);
        return OffspringLaw::zeta_log(static_cast<std::uint64_t>(get_num(j, "k_max", path)));
    }
    fail(path + "/family", "unknown offspring family '" + fam + "'");
}

ordered_json law_to_json(const OffspringLaw& law) {
    // canonical form mirrors the schema exactly
    ordered_json j;
    switch (law.family()) {
        case OffspringLaw::Family::Dirac:
            j["family"] = "dirac";
            j["k"] = law.support_max();
            break;
        case OffspringLaw::Family::TwoAtom: {
            j["family"] = "two_atom";
            // recover atoms from the pmf
            const std::uint64_t hi = law.support_max();
            std::uint64_t a = hi, b = hi;
            for (std::uint64_t k = 0; k <= hi; ++k) {
                if (law.pmf(k) > 0.0) {
                    a = k;
                    break;
                }
            }
            b = hi;
            j["a"] = a;
            j["b"] = b;
            j["q"] = a == b ? 1.0 : law.pmf(a);
            break;
        }
        case OffspringLaw::Family::Geometric:
            j["family"] = "geometric";
            j["p"] = law.mean() / (1.0 + law.mean());
            break;
        case OffspringLaw::Family::Poisson:
            j["family"] = "poisson";
            j["lambda"] = law.mean();
            break;
        case OffspringLaw::Family::Table: {
            j["family"] = "table";
            std::vector<double> pmf;
            for (std::uint64_t k = 0; k <= law.support_max(); ++k) pmf.push_back(law.pmf(k));
            j["pmf"] = pmf;
            break;
        }
        case OffspringLaw::Family::ZetaLog:
            j["family"] = "zeta_log";
            j["k_max"] = law.support_max();
            break;
    }
    return j;
}

SlowVarying parse_ell(const json& j, const std::string& path) {
    if (!j.is_object() || !j.contains("kind")) fail(path, "ell needs a 'kind'");
    const std::string kind = j["kind"].get<std::string>();
    if (kind == "one") {
        reject_unknown(j, {"kind"}, path);
        return SlowVarying::one();
    }
    if (kind == "const") {
        reject_unknown(j, {"kind", "c"}, path);
        return SlowVarying::constant(get_num(j, "c", path));
    }
    if (kind == "eps_power_log") {
        reject_unknown(j, {"kind", "gamma"}, path);
        return SlowVarying::eps_power_log(get_num(j, "gamma", path));
    }
    if (kind == "eps_decay") {
        reject_unknown(j, {"kind", "gamma", "r"}, path);
        return SlowVarying::eps_decay(get_num(j, "gamma", path), get_num(j, "r", path));
    }
    if (kind == "log_pow") {
        reject_unknown(j, {"kind", "gamma"}, path);
        return SlowVarying::log_pow(get_num(j, "gamma", path));
    }
    if (kind == "log_e_plus_x") {
        reject_unknown(j, {"kind"}, path);
        return SlowVarying::log_e_plus_x();
    }
    if (kind == "one_plus_log_plus") {
        reject_unknown(j, {"kind"}, path);
        return SlowVarying::one_plus_log_plus();
    }
    fail(path + "/kind", "unknown ell kind '" + kind + "'");
}

ordered_json ell_to_json(const SlowVarying& ell) {
    ordered_json j;
    switch (ell.kind()) {
        case SlowVarying::Kind::One: j["kind"] = "one"; break;
        case SlowVarying::Kind::Const:
            j["kind"] = "const";
            j["c"] = ell(1.0);
            break;
        case SlowVarying::Kind::EpsPowerLog:
            j["kind"] = "eps_power_log";
            j["gamma"] = ell.epsilon(std::exp(2.0)) * 2.0;
            break;
        case SlowVarying::Kind::EpsDecay: {
            j["kind"] = "eps_decay";
            // recover (gamma, r) from two probes of eps = gamma x^-r
            const double e1 = ell.epsilon(10.0), e2 = ell.epsilon(100.0);
            const double r = std::log(e1 / e2) / std::log(10.0);
            j["gamma"] = e1 * std::pow(10.0, r);
            j["r"] = r;
            break;
        }
        case SlowVarying::Kind::LogPow:
            j["kind"] = "log_pow";
            j["gamma"] = std::log(ell(std::exp(std::exp(1.0)))) / 1.0;
            break;
        case SlowVarying::Kind::LogEPlusX: j["kind"] = "log_e_plus_x"; break;
        case SlowVarying::Kind::OnePlusLogPlus: j["kind"] = "one_plus_log_plus"; break;
        case SlowVarying::Kind::Custom: j["kind"] = "custom"; break;
    }
    return j;
}

ConcaveEll parse_concave(const json& j, const std::string& path) {
    if (!j.is_object() || !j.contains("kind")) fail(path, "concave ell needs a 'kind'");
    const std::string kind = j["kind"].get<std::string>();
    if (kind == "log_e_plus_x") {
        reject_unknown(j, {"kind"}, path);
        return ConcaveEll::log_e_plus_x();
    }
    if (kind == "one_plus_log1p") {
        reject_unknown(j, {"kind"}, path);
        return ConcaveEll::one_plus_log1p();
    }
    if (kind == "power") {
        reject_unknown(j, {"kind", "p"}, path);
        return ConcaveEll::power(get_num(j, "p", path));
    }
    fail(path + "/kind", "unknown concave ell kind '" + kind + "'");
}

ordered_json concave_to_json(const ConcaveEll& ell) {
    ordered_json j;
    switch (ell.kind()) {
        case ConcaveEll::Kind::LogEPlusX: j["kind"] = "log_e_plus_x"; break;
        case ConcaveEll::Kind::OnePlusLog1p: j["kind"] = "one_plus_log1p"; break;
        case ConcaveEll::Kind::Power:
            j["kind"] = "power";
            j["p"] = std::log2(ell(2.0));
            break;
        case ConcaveEll::Kind::Custom: j["kind"] = "custom"; break;
    }
    return j;
}

// shortest round-trip decimal form, locale independent
std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string format_u64(std::uint64_t v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string hash_hex(std::uint64_t h) {
    std::ostringstream s;
    s << std::hex << std::setw(16) << std::setfill('0') << h;
    return s.str();
}

}  // namespace

std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    return h;
}

Scenario parse_scenario_json(const json& j) {
    if (!j.is_object()) throw ScenarioError("scenario: top level must be an object");
    reject_unknown(j, {"name", "experiment", "seed", "threads", "env", "sim", "weight", "concave",
                       "fncheck", "moments", "tail", "large_dev", "output"},
                   "scenario");

    Scenario sc;
    if (j.contains("name")) sc.name = j["name"].get<std::string>();
    if (j.contains("experiment")) sc.experiment = j["experiment"].get<std::string>();
    static const std::vector<std::string> kinds = {"criteria", "simulate", "moments",
                                                   "tail", "fncheck", "verify"};
    if (std::find(kinds.begin(), kinds.end(), sc.experiment) == kinds.end()) {
        fail("scenario/experiment", "unknown experiment '" + sc.experiment + "'");
    }
    if (j.contains("seed")) sc.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("threads")) sc.threads = j["threads"].get<int>();

    if (!j.contains("env")) fail("scenario", "missing required key 'env'");
    const auto& env = j["env"];
    reject_unknown(env, {"states"}, "scenario/env");
    if (!env.contains("states") || !env["states"].is_array() || env["states"].empty()) {
        fail("scenario/env", "'states' must be a non-empty array");
    }
    for (std::size_t i = 0; i < env["states"].size(); ++i) {
        const auto& st = env["states"][i];
        const std::string path = "scenario/env/states[" + std::to_string(i) + "]";
        reject_unknown(st, {"weight", "law"}, path);
        if (!st.contains("law")) fail(path, "missing 'law'");
        try {
            sc.env_states.push_back(
                {parse_law(st["law"], path + "/law"), get_num(st, "weight", path)});
        } catch (const ScenarioError&) {
            throw;
        } catch (const std::exception& e) {
            fail(path, e.what());
        }
    }
    try {
        EnvironmentLaw check(sc.env_states);  // weight/mean validation
    } catch (const std::exception& e) {
        fail("scenario/env", e.what());
    }

    if (j.contains("sim")) {
        const auto& sim = j["sim"];
        reject_unknown(sim, {"n_max", "count", "mode", "collect_at", "exact_cap",
                             "clt_threshold", "log_scale_switch"},
                       "scenario/sim");
        sc.sim.n_max = static_cast<int>(get_num_or(sim, "n_max", sc.sim.n_max));
        sc.count = static_cast<std::size_t>(get_num_or(sim, "count", static_cast<double>(sc.count)));
        if (sim.contains("mode")) {
            const std::string mode = sim["mode"].get<std::string>();
            if (mode == "exact") {
                sc.sim.mode = SumMode::Exact;
            } else if (mode == "auto") {
                sc.sim.mode = SumMode::Auto;
            } else {
                fail("scenario/sim/mode", "expected 'exact' or 'auto'");
            }
        }
        if (sim.contains("collect_at")) sc.collect_at = sim["collect_at"].get<std::vector<int>>();
        sc.sim.exact_cap = static_cast<std::uint64_t>(
            get_num_or(sim, "exact_cap", static_cast<double>(sc.sim.exact_cap)));
        sc.sim.clt_threshold = static_cast<std::uint64_t>(
            get_num_or(sim, "clt_threshold", static_cast<double>(sc.sim.clt_threshold)));
        sc.sim.log_scale_switch = get_num_or(sim, "log_scale_switch", sc.sim.log_scale_switch);
    }
    try {
        sc.sim.validate();
        if (sc.count < 1) throw std::invalid_argument("count must be >= 1");
    } catch (const std::exception& e) {
        fail("scenario/sim", e.what());
    }
    if (sc.collect_at.empty()) sc.collect_at = {sc.sim.n_max};
    for (int n : sc.collect_at) {
        if (n < 0 || n > sc.sim.n_max) fail("scenario/sim/collect_at", "entries must lie in [0, n_max]");
    }

    if (j.contains("weight")) {
        const auto& w = j["weight"];
        reject_unknown(w, {"alpha", "ell"}, "scenario/weight");
        sc.weight_alpha = get_num_or(w, "alpha", sc.weight_alpha);
        if (sc.weight_alpha < 1.0) fail("scenario/weight/alpha", "alpha must be >= 1");
        if (w.contains("ell")) {
            try {
                sc.weight_ell = parse_ell(w["ell"], "scenario/weight/ell");
            } catch (const ScenarioError&) {
                throw;
            } catch (const std::exception& e) {
                fail("scenario/weight/ell", e.what());
            }
        }
    }
    if (j.contains("concave")) {
        const auto& c = j["concave"];
        reject_unknown(c, {"ell"}, "scenario/concave");
        if (c.contains("ell")) sc.concave_ell = parse_concave(c["ell"], "scenario/concave/ell");
    }
    if (j.contains("fncheck")) {
        const auto& f = j["fncheck"];
        reject_unknown(f, {"beta"}, "scenario/fncheck");
        sc.fncheck_beta = get_num_or(f, "beta", sc.fncheck_beta);
        if (!(sc.fncheck_beta > 1.0 && sc.fncheck_beta <= 2.0)) {
            fail("scenario/fncheck/beta", "beta must be in (1, 2]");
        }
    }
    if (j.contains("moments")) {
        const auto& m = j["moments"];
        reject_unknown(m, {"top_increment_rel", "growth_slope", "min_exceedance"}, "scenario/moments");
        sc.policy.top_increment_rel = get_num_or(m, "top_increment_rel", sc.policy.top_increment_rel);
        sc.policy.growth_slope = get_num_or(m, "growth_slope", sc.policy.growth_slope);
        sc.policy.min_exceedance = static_cast<std::uint64_t>(
            get_num_or(m, "min_exceedance", static_cast<double>(sc.policy.min_exceedance)));
    }
    if (j.contains("tail")) {
        const auto& t = j["tail"];
        reject_unknown(t, {"generation", "k_fractions"}, "scenario/tail");
        sc.tail_generation = static_cast<int>(get_num_or(t, "generation", 0.0));
        if (t.contains("k_fractions")) sc.tail_k_fractions = t["k_fractions"].get<std::vector<double>>();
    }
    if (sc.tail_generation == 0) sc.tail_generation = sc.sim.n_max;
    if (sc.tail_generation < 1 || sc.tail_generation > sc.sim.n_max) {
        fail("scenario/tail/generation", "must lie in [1, n_max]");
    }
    if (j.contains("large_dev")) {
        const auto& ld = j["large_dev"];
        reject_unknown(ld, {"b", "n_max", "count"}, "scenario/large_dev");
        sc.large_dev_b = get_num_or(ld, "b", sc.large_dev_b);
        sc.large_dev_n_max = static_cast<int>(get_num_or(ld, "n_max", sc.large_dev_n_max));
        sc.large_dev_count = static_cast<std::size_t>(
            get_num_or(ld, "count", static_cast<double>(sc.large_dev_count)));
        if (!(sc.large_dev_b > 0.0 && sc.large_dev_b < 1.0)) fail("scenario/large_dev/b", "b must be in (0,1)");
    }
    if (j.contains("output")) {
        const auto& o = j["output"];
        reject_unknown(o, {"dir", "format"}, "scenario/output");
        if (o.contains("dir")) sc.out_dir = o["dir"].get<std::string>();
        if (o.contains("format")) sc.format = o["format"].get<std::string>();
        if (sc.format != "csv" && sc.format != "json") fail("scenario/output/format", "csv or json");
    }

    // canonical defaults-applied form; the hash covers the effective config,
    // seed included, so outputs are reproducible from their own header
    ordered_json c;
    c["name"] = sc.name;
    c["experiment"] = sc.experiment;
    c["seed"] = sc.seed;
    ordered_json states = ordered_json::array();
    for (const auto& st : sc.env_states) {
        ordered_json s;
        s["weight"] = st.weight;
        s["law"] = law_to_json(st.law);
        states.push_back(s);
    }
    c["env"]["states"] = states;
    c["sim"] = {{"n_max", sc.sim.n_max},
                {"count", sc.count},
                {"mode", sc.sim.mode == SumMode::Exact ? "exact" : "auto"},
                {"collect_at", sc.collect_at},
                {"exact_cap", sc.sim.exact_cap},
                {"clt_threshold", sc.sim.clt_threshold},
                {"log_scale_switch", sc.sim.log_scale_switch}};
    c["weight"] = {{"alpha", sc.weight_alpha}, {"ell", ell_to_json(sc.weight_ell)}};
    c["concave"] = {{"ell", concave_to_json(sc.concave_ell)}};
    c["fncheck"] = {{"beta", sc.fncheck_beta}};
    c["moments"] = {{"top_increment_rel", sc.policy.top_increment_rel},
                    {"growth_slope", sc.policy.growth_slope},
                    {"min_exceedance", sc.policy.min_exceedance}};
    c["tail"] = {{"generation", sc.tail_generation}, {"k_fractions", sc.tail_k_fractions}};
    c["large_dev"] = {{"b", sc.large_dev_b}, {"n_max", sc.large_dev_n_max}, {"count", sc.large_dev_count}};
    c["output"] = {{"dir", sc.out_dir}, {"format", sc.format}};
    sc.canonical = c;
    sc.hash = fnv1a64(c.dump());
    return sc;
}

Scenario parse_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError("cannot open scenario file: " + path);
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ScenarioError(path + ": " + e.what());
    }
    return parse_scenario_json(j);
}

// ---------------------------------------------------------------------------
// report serialization

ordered_json to_json(const ExtReal& v) {
    switch (v.kind) {
        case ExtReal::Kind::Finite: return v.value;
        case ExtReal::Kind::Infinite: return "inf";
        case ExtReal::Kind::Undetermined: return "undetermined";
    }
    return nullptr;
}

ordered_json to_json(const CriteriaReport& rep) {
    ordered_json j;
    j["supercritical"] = rep.supercritical;
    j["mean_log_m"] = rep.mean_log_m;
    j["neg_log_sq"] = rep.neg_log_sq;
    ordered_json rho = ordered_json::array();
    for (const auto& [a, r] : rep.rho_probes) rho.push_back({{"a", a}, {"rho", r}});
    j["rho"] = rho;
    j["critical_alpha"] = to_json(rep.critical_alpha.alpha);
    j["critical_alpha_bracket_capped"] = rep.critical_alpha.bracket_capped;
    j["w1_xlogx"] = to_json(rep.w1_xlogx);
    j["kesten_stigum_hypotheses"] = rep.ks_hypotheses_hold;
    j["truncation_sensitive"] = rep.truncation_sensitive;
    return j;
}

ordered_json to_json(const MomentReport& rep) {
    ordered_json j;
    j["estimate"] = rep.estimate;
    j["std_error"] = rep.std_error;
    j["n_samples"] = rep.n_samples;
    j["generation"] = rep.generation;
    ordered_json ladder = ordered_json::array();
    for (std::size_t i = 0; i < rep.caps.size(); ++i) {
        ladder.push_back({{"cap", rep.caps[i]},
                          {"capped_mean", rep.capped_means[i]},
                          {"exceedance", rep.exceedance[i]}});
    }
    j["ladder"] = ladder;
    j["verdict"] = to_string(rep.verdict);
    j["top_slope"] = rep.top_slope;
    j["tail_resolved"] = rep.tail_resolved;
    if (rep.estimate_half_n) j["estimate_half_n"] = *rep.estimate_half_n;
    return j;
}

ordered_json to_json(const TailReport& rep) {
    ordered_json j;
    ordered_json ladder = ordered_json::array();
    for (const auto& [k, h] : rep.ladder) ladder.push_back({{"k", k}, {"hill", h}});
    j["ladder"] = ladder;
    j["chosen_k"] = rep.chosen_k;
    j["chosen"] = rep.chosen;
    j["stability"] = {rep.stability_lo, rep.stability_hi};
    j["positive_samples"] = rep.positive_samples;
    j["n_samples"] = rep.n_samples;
    j["generation"] = rep.generation;
    j["label"] = rep.label;
    return j;
}

ordered_json to_json(const Theorem11Report& rep) {
    ordered_json j;
    j["alpha"] = rep.alpha;
    j["ell"] = rep.ell_name;
    j["interior"] = rep.interior == InteriorVerdict::Interior
                        ? "interior"
                        : rep.interior == InteriorVerdict::Outside ? "outside" : "boundary";
    j["w1_moment"] = to_json(rep.w1_moment.value);
    j["w1_exact"] = rep.w1_moment.exact;
    j["predicted"] = to_string(rep.predicted);
    j["observed"] = to_json(rep.observed);
    j["agreement"] = rep.agreement;
    return j;
}

ordered_json to_json(const Theorem12Report& rep) {
    ordered_json j;
    j["ell"] = rep.ell_name;
    j["e_m_inv"] = rep.e_m_inv;
    j["main_hypothesis"] = rep.main_hypothesis;
    j["relaxed_branch"] = rep.relaxed_branch;
    j["w1_hat_moment"] = to_json(rep.w1_hat_moment.value);
    j["predicted"] = to_string(rep.predicted);
    j["observed_w"] = to_json(rep.observed_w);
    j["observed_w_star"] = to_json(rep.observed_w_star);
    j["consistent"] = rep.consistent;
    return j;
}

ordered_json to_json(const Theorem13Report& rep) {
    ordered_json j;
    j["criteria"] = to_json(rep.criteria);
    j["observed_w_star"] = to_json(rep.observed_w_star);
    j["observed_w_star_weighted"] = to_json(rep.observed_w_star_weighted);
    ordered_json drift = ordered_json::array();
    for (const auto& [n, st] : rep.w_drift) {
        drift.push_back({{"n", n}, {"mean", st.mean}, {"se", st.se}});
    }
    j["w_drift"] = drift;
    j["drift_ok"] = rep.drift_ok;
    j["truncation_sensitive"] = rep.truncation_sensitive;
    if (rep.truncation_sensitive) {
        j["annotation"] = "truncation-sensitive - degenerate limit not reproducible at finite K";
    }
    j["consistent"] = rep.consistent;
    return j;
}

ordered_json to_json(const LargeDevResult& res) {
    ordered_json j;
    j["b"] = res.b;
    j["count"] = res.count;
    j["prob"] = res.prob;
    j["partial_sum"] = res.partial_sum;
    return j;
}

// ---------------------------------------------------------------------------
// runners

std::string simulate_csv(const Scenario& sc) {
    const auto env = sc.environment();
    SimConfig cfg = sc.sim;
    cfg.seed = sc.seed;

    std::ostringstream head;
    head << "# scenario=" << hash_hex(sc.hash) << " seed=" << sc.seed << " name=" << sc.name << "\n"
         << "traj_id,n,Z_or_logZ,logPi,W,Wstar,extinct\n";

    const std::size_t count = sc.count;
    const int n_threads = std::max(1, std::min<int>(resolve_threads(sc.threads),
                                                    static_cast<int>(count)));
    std::vector<std::string> parts(static_cast<std::size_t>(n_threads));

    const auto run_range = [&](int ti, std::size_t lo, std::size_t hi) {
        std::string& out = parts[static_cast<std::size_t>(ti)];
        for (std::size_t traj = lo; traj < hi; ++traj) {
            const auto t = run_annealed(env, cfg, traj);
            for (int n = 0; n <= cfg.n_max; ++n) {
                const auto i = static_cast<std::size_t>(n);
                out += format_u64(traj);
                out += ',';
                out += format_u64(static_cast<std::uint64_t>(n));
                out += ',';
                if (t.z[i] == kLogScaleMarker) {
                    out += format_double(t.log_z(n));
                } else {
                    out += format_u64(t.z[i]);
                }
                out += ',';
                out += format_double(t.log_pi[i]);
                out += ',';
                out += format_double(t.w[i]);
                out += ',';
                out += format_double(t.w_star[i]);
                out += ',';
                out += (t.extinct_at && *t.extinct_at <= n) ? '1' : '0';
                out += '\n';
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

    std::string out = head.str();
    for (const auto& p : parts) out += p;  // contiguous chunks: trajectory order
    return out;
}

namespace {

ordered_json with_provenance(const Scenario& sc, ordered_json body) {
    ordered_json j;
    j["scenario"] = hash_hex(sc.hash);
    j["seed"] = sc.seed;
    j["name"] = sc.name;
    j["report"] = std::move(body);
    return j;
}

}  // namespace

ordered_json run_criteria(const Scenario& sc) {
    const auto env = sc.environment();
    auto rep = env.kesten_stigum_report();
    // include the scenario's weight exponent among the probes
    rep.rho_probes.emplace_back(sc.weight_alpha, env.rho(sc.weight_alpha));
    return with_provenance(sc, to_json(rep));
}

ordered_json run_moments(const Scenario& sc) {
    const auto env = sc.environment();
    SimBudget budget;
    budget.count = sc.count;
    budget.generation = sc.sim.n_max;
    budget.seed = sc.seed;
    budget.threads = sc.threads;
    budget.mode = sc.sim.mode;
    budget.clt_threshold = sc.sim.clt_threshold;
    const auto rep = verdict_theorem11(env, sc.weight_alpha, sc.weight_ell, budget, sc.policy);
    return with_provenance(sc, to_json(rep));
}

ordered_json run_tail(const Scenario& sc) {
    const auto env = sc.environment();
    SimConfig cfg = sc.sim;
    cfg.seed = sc.seed;
    const int collect[] = {sc.tail_generation};
    const auto res = batch(env, cfg, sc.count, collect, sc.threads);
    const auto rep = tail_report(res.w[0], sc.tail_k_fractions, sc.tail_generation);
    ordered_json body = to_json(rep);
    body["survivor_fraction"] =
        static_cast<double>(res.survivors[0]) / static_cast<double>(res.count);
    return with_provenance(sc, body);
}

ordered_json run_fncheck(const Scenario& sc) {
    ordered_json body;
    const auto grid = log_grid(1e-3, 1e9, 512);

    if (sc.weight_alpha > 1.0 && sc.fncheck_beta < sc.weight_alpha) {
        const WeightFn phi(sc.weight_alpha, sc.weight_ell);
        const CorrectedConvexWeight phi1(phi, sc.fncheck_beta);
        const auto direct = shape_certificate([&](double x) { return phi1(x); }, 1.0, grid,
                                              CertShape::Convex);
        const auto transformed = shape_certificate([&](double x) { return phi1(x); }, sc.fncheck_beta,
                                                   grid, CertShape::Convex);
        const double x_ref = 1e8;
        ordered_json c;
        c["alpha"] = sc.weight_alpha;
        c["beta"] = sc.fncheck_beta;
        c["ell"] = sc.weight_ell.name();
        c["threshold"] = phi1.threshold();
        c["convex"] = direct.pass;
        c["convex_worst"] = direct.worst;
        c["convex_transformed"] = transformed.pass;
        c["ratio_at_1e8"] = phi1(x_ref) / phi(x_ref);
        body["convex_correction"] = c;
    }

    {
        const CorrectedConcaveWeight w(sc.concave_ell);
        const auto convex = shape_certificate([&](double x) { return w(x); }, 1.0, grid,
                                              CertShape::Convex);
        const auto sqrt_concave = shape_certificate([&](double x) { return w(x); }, 2.0, grid,
                                                    CertShape::Concave);
        double doubling = 0.0;
        for (double x : grid) doubling = std::max(doubling, w(2.0 * x) / w(x));
        ordered_json c;
        c["ell"] = sc.concave_ell.name();
        c["threshold"] = w.threshold();
        c["c0"] = w.c0();
        c["convex"] = convex.pass;
        c["sqrt_concave"] = sqrt_concave.pass;
        c["doubling_sup"] = doubling;
        body["concave_correction"] = c;
    }
    return with_provenance(sc, body);
}

std::string run_to_file(const Scenario& sc) {
    const std::string base = sc.out_dir + "/" + sc.name + "_" + sc.experiment;
    std::string path;
    std::string payload;
    if (sc.experiment == "simulate") {
        path = base + ".csv";
        payload = simulate_csv(sc);
    } else {
        ordered_json j;
        if (sc.experiment == "criteria") {
            j = run_criteria(sc);
        } else if (sc.experiment == "moments") {
            j = run_moments(sc);
        } else if (sc.experiment == "tail") {
            j = run_tail(sc);
        } else if (sc.experiment == "fncheck") {
            j = run_fncheck(sc);
        } else {
            throw ScenarioError("run_to_file: experiment '" + sc.experiment +
                                "' is not a file-producing run");
        }
        path = base + ".json";
        payload = j.dump(2);
        payload += "\n";
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << payload;
    return path;
}

}  // namespace bprelab
