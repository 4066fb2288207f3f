#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

#include "bnm/cli.hpp"

int main(int argc, char** argv) {
    using namespace bnm::cli;

    CLI::App app{"bnmlab: batch nuclear-norm maximization experiments"};
    app.require_subcommand(1);

    Options opts;
    std::uint64_t seed = 0;
    std::size_t seeds = 0;
    bool quiet = false;
    bool verbose = false;
    std::string config;
    std::string out_dir = ".";

    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config, "Run configuration file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "Output directory (created if missing)");
        sub->add_option("--seed-override", seed, "Master seed; beats config and BNMLAB_SEED");
        sub->add_flag("-q,--quiet", quiet, "Print nothing on success");
        sub->add_flag("-v,--verbose", verbose, "Print per-cell detail");
    };

    CLI::App* check = app.add_subcommand("check", "Run the matrix invariant and gradient suites");
    bnm::CheckOptions check_opts;
    check->add_option("--seed-override", seed, "Population seed; beats BNMLAB_SEED");
    check->add_option("--population", check_opts.population, "Matrices per bound suite");
    check->add_option("--fd-population", check_opts.fd_population, "Matrices per objective for fd_check");

    app.add_subcommand("toy", "Print the 2x2 toy table and the equal-entropy demo");

    CLI::App* train = app.add_subcommand("train", "Train one model and write run.csv");
    add_common(train);

    CLI::App* compare = app.add_subcommand("compare", "Compare methods over paired seeds");
    add_common(compare);
    compare->add_option("--seeds", seeds, "Number of seeds")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    if (quiet && verbose) {
        std::cerr << "error: --quiet and --verbose are exclusive\n";
        return kExitUsage;
    }
    opts.verbosity = quiet ? Verbosity::Quiet : verbose ? Verbosity::Verbose : Verbosity::Normal;
    if (!config.empty()) opts.config_path = config;
    opts.output_dir = out_dir;
    for (CLI::App* sub : {check, train, compare})
        if (sub->parsed() && sub->count("--seed-override")) opts.seed_override = seed;
    if (compare->parsed() && compare->count("--seeds")) opts.seeds = seeds;

    if (check->parsed()) {
        check_opts.seed = resolve_seed(opts.seed_override, std::nullopt, std::getenv(kSeedEnvVar));
        return cmd_check(check_opts, std::cout);
    }
    if (train->parsed()) return cmd_train(opts, std::cout, std::cerr);
    if (compare->parsed()) return cmd_compare(opts, std::cout, std::cerr);
    return cmd_toy(std::cout);
}
