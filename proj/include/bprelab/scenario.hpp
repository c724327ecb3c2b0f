#pragma once

#include "bprelab/engine.hpp"
#include "bprelab/environment.hpp"
#include "bprelab/estimate.hpp"
#include "bprelab/slowvary.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace bprelab {

// configuration / schema violation; the CLI maps it to exit code 2
struct ScenarioError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Scenario {
    std::string name = "scenario";
    std::string experiment = "criteria";
    std::uint64_t seed = 1;
    int threads = 0;  // 0: BPRE_LAB_THREADS or hardware

    std::vector<EnvironmentLaw::State> env_states;
    SimConfig sim;
    std::size_t count = 100'000;
    std::vector<int> collect_at;

    double weight_alpha = 2.0;
    SlowVarying weight_ell = SlowVarying::one();
    ConcaveEll concave_ell = ConcaveEll::log_e_plus_x();
    double fncheck_beta = 1.5;

    int tail_generation = 0;  // 0: sim.n_max
    std::vector<double> tail_k_fractions = {0.005, 0.01, 0.02, 0.05};

    double large_dev_b = 0.8;
    int large_dev_n_max = 60;
    std::size_t large_dev_count = 1'000'000;

    VerdictPolicy policy;

    std::string out_dir = ".";
    std::string format = "csv";

    // filled after validation: canonical (defaults-applied) form and its hash
    nlohmann::ordered_json canonical;
    std::uint64_t hash = 0;

    EnvironmentLaw environment() const { return EnvironmentLaw(env_states); }
};

Scenario parse_scenario_json(const nlohmann::json& j);
Scenario parse_scenario(const std::string& path);

std::uint64_t fnv1a64(const std::string& data);

// ---------------------------------------------------------------------------
// report serialization

nlohmann::ordered_json to_json(const ExtReal& v);
nlohmann::ordered_json to_json(const CriteriaReport& rep);
nlohmann::ordered_json to_json(const MomentReport& rep);
nlohmann::ordered_json to_json(const TailReport& rep);
nlohmann::ordered_json to_json(const Theorem11Report& rep);
nlohmann::ordered_json to_json(const Theorem12Report& rep);
nlohmann::ordered_json to_json(const Theorem13Report& rep);
nlohmann::ordered_json to_json(const LargeDevResult& res);

// ---------------------------------------------------------------------------
// experiment runners (the CLI is a thin shell over these)

// full-trajectory CSV with columns traj_id,n,Z_or_logZ,logPi,W,Wstar,extinct;
// locale-independent shortest round-trip numbers, byte-identical across runs
// and thread counts
std::string simulate_csv(const Scenario& sc);

nlohmann::ordered_json run_criteria(const Scenario& sc);
nlohmann::ordered_json run_moments(const Scenario& sc);
nlohmann::ordered_json run_tail(const Scenario& sc);
nlohmann::ordered_json run_fncheck(const Scenario& sc);

// dispatches on sc.experiment (everything but verify), writes the artifact
// into sc.out_dir and returns the file path
std::string run_to_file(const Scenario& sc);

}  // namespace bprelab
