#include <iostream>

#include <CLI11.hpp>

#include "dsmcbf_cli/commands.hpp"

using namespace dsmcbf::cli;

int main(int argc, char** argv) {
    CLI::App app{"DSM-CBF gantry crane simulator"};
    app.require_subcommand(1);

    CommandOptions opts;
    auto add_common = [&](CLI::App* sub, bool config_required) {
        auto* cfg = sub->add_option("--config", opts.config, "scenario file (YAML)");
        if (config_required) cfg->required();
        sub->add_option("--out", opts.out, "output directory");
        sub->add_option("--dt", opts.dt, "integration step [s]");
        sub->add_option("--horizon", opts.horizon, "simulated time [s]");
        sub->add_option("--controller", opts.controller, "nominal|erg|cbf|dsmcbf|all")
            ->check(CLI::IsMember({"nominal", "erg", "cbf", "dsmcbf", "all"}));
        sub->add_option("--seed", opts.seed, "seed for randomized sweeps");
    };

    auto* simulate = app.add_subcommand("simulate", "write one CSV per controller plus summary and manifest");
    add_common(simulate, true);
    auto* verify = app.add_subcommand("verify-thresholds", "compare closed-form thresholds to the brute-force oracle");
    add_common(verify, true);
    verify->add_option("--resolution", opts.resolution, "oracle grid points per axis");
    auto* compare = app.add_subcommand("compare", "run all four controllers and tabulate");
    add_common(compare, true);
    auto* selftest = app.add_subcommand("selftest", "run the built-in property checks");
    add_common(selftest, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    if (*simulate) return cmd_simulate(opts, std::cout, std::cerr);
    if (*verify) return cmd_verify_thresholds(opts, std::cout, std::cerr);
    if (*compare) return cmd_compare(opts, std::cout, std::cerr);
    return cmd_selftest(opts, std::cout, std::cerr);
}
