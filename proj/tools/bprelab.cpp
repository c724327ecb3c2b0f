// bprelab: simulation and numerical-verification laboratory for supercritical
// branching processes in i.i.d. random environments.
//
// Subcommands: criteria, simulate, moments, tail, fncheck, verify.
// Exit codes: 0 success, 1 runtime failure, 2 configuration error,
// 3 acceptance failure.

#include "bprelab/acceptance.hpp"
#include "bprelab/scenario.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <optional>
#include <string>

namespace {

struct CommonArgs {
    std::string config;
    std::optional<std::uint64_t> seed;
    int threads = 0;
    std::optional<std::string> out_dir;
    std::optional<std::string> format;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool config_required) {
    auto* cfg = cmd->add_option("--config", args.config, "scenario file (JSON schema)");
    if (config_required) cfg->required();
    cmd->add_option("--seed", args.seed, "override the scenario seed");
    cmd->add_option("--threads", args.threads,
                    "worker threads (default: BPRE_LAB_THREADS, then hardware)");
    cmd->add_option("--out", args.out_dir, "output directory (default from the scenario)");
    cmd->add_option("--format", args.format, "csv|json (default from the scenario)")
        ->check(CLI::IsMember({"csv", "json"}));
}

int run_file_experiment(const std::string& experiment, const CommonArgs& args) {
    auto sc = bprelab::parse_scenario(args.config);
    sc.experiment = experiment;
    if (args.seed) sc.seed = *args.seed;
    if (args.out_dir) sc.out_dir = *args.out_dir;
    if (args.format) sc.format = *args.format;
    sc.threads = args.threads;
    // re-canonicalize so the emitted hash covers the effective configuration
    sc = bprelab::parse_scenario_json([&] {
        auto c = sc.canonical;
        c["experiment"] = experiment;
        c["seed"] = sc.seed;
        c["output"] = {{"dir", sc.out_dir}, {"format", sc.format}};
        return c;
    }());
    sc.threads = args.threads;
    const std::string path = bprelab::run_to_file(sc);
    std::printf("%s\n", path.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"branching processes in random environments: simulation and criteria lab"};
    app.require_subcommand(1);

    CommonArgs criteria_args, simulate_args, moments_args, tail_args, fncheck_args;
    CommonArgs verify_args;
    std::vector<int> verify_ids;

    add_common(app.add_subcommand("criteria", "exact moment criteria for the environment"),
               criteria_args, true);
    add_common(app.add_subcommand("simulate", "trajectory batch as CSV"), simulate_args, true);
    add_common(app.add_subcommand("moments", "weighted-moment report for W_n"), moments_args, true);
    add_common(app.add_subcommand("tail", "Hill tail-index report"), tail_args, true);
    add_common(app.add_subcommand("fncheck", "weight-correction certificates"), fncheck_args, true);
    auto* verify = app.add_subcommand("verify", "run the acceptance suite");
    verify->add_option("--threads", verify_args.threads, "worker threads");
    verify->add_option("--seed", verify_args.seed, "master seed override");
    verify->add_option("--criterion", verify_ids, "run only the listed criteria");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (app.got_subcommand("criteria")) return run_file_experiment("criteria", criteria_args);
        if (app.got_subcommand("simulate")) return run_file_experiment("simulate", simulate_args);
        if (app.got_subcommand("moments")) return run_file_experiment("moments", moments_args);
        if (app.got_subcommand("tail")) return run_file_experiment("tail", tail_args);
        if (app.got_subcommand("fncheck")) return run_file_experiment("fncheck", fncheck_args);
        if (app.got_subcommand("verify")) {
            bprelab::AcceptanceOptions opts;
            opts.threads = verify_args.threads;
            if (verify_args.seed) opts.seed = *verify_args.seed;
            const auto results = bprelab::run_acceptance(opts, verify_ids);
            bool all_pass = true;
            for (const auto& r : results) {
                std::printf("%s\n", bprelab::format_result(r).c_str());
                all_pass = all_pass && r.pass;
            }
            return all_pass ? 0 : 3;
        }
    } catch (const bprelab::ScenarioError& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 2;
}
