// Command line front end: qdcluster run <scenario.json> [options]
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qdcluster/scenario.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Quantum-dot cluster-state simulator"};
    app.require_subcommand(1);

    qdc::RunOptions opts;
    std::string out_dir;
    std::uint64_t seed = 0;

    auto* run = app.add_subcommand("run", "Run a scenario file");
    run->add_option("path", opts.path, "Scenario JSON file")->required();
    run->add_option("--set", opts.overrides, "Override a field, key=value with a dotted key")->take_all();
    auto* out_opt = run->add_option("--out", out_dir, "Report directory");
    auto* seed_opt = run->add_option("--seed", seed, "Random seed");
    run->add_flag("--force", opts.force, "Overwrite an existing report");
    run->add_option("--threads", opts.threads, "Worker threads (0 keeps the default)")->check(CLI::NonNegativeNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    if (out_opt->count() > 0) {
        opts.out_dir = out_dir;
    }
    if (seed_opt->count() > 0) {
        opts.seed = seed;
    }
    return qdc::run_scenario(opts, std::cout, std::cerr);
}
