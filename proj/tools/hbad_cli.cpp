#include <CLI11.hpp>

#include <iostream>

#include "hbad/cli.hpp"

int main(int argc, char** argv) {
    using hbad::cli::Command;
    CLI::App app{"Periodic responses of nonlinear structural models by harmonic balance"};
    app.require_subcommand(1);

    hbad::cli::Invocation inv;
    std::uint64_t seed = 0;
    const std::pair<Command, const char*> commands[] = {
        {Command::solve, "Solve one frequency point (omega.value)"},
        {Command::sweep, "Natural-parameter sweep (omega.start, omega.end, omega.step)"},
        {Command::trace, "Pseudo-arclength trace (omega.start, omega.end or omega.min/max)"},
        {Command::timesim, "Time simulation to steady state (omega.value)"},
        {Command::compare, "HB against time integration at every omega.list entry"},
    };
    std::vector<CLI::Option*> seed_opts;
    for (const auto& [cmd, help] : commands) {
        CLI::App* sub = app.add_subcommand(hbad::cli::to_string(cmd), help);
        sub->add_option("--config", inv.config_path, "JSON configuration file")->required();
        sub->add_option("--out", inv.out, "Output directory")->capture_default_str();
        sub->add_option("--jobs", inv.jobs, "Runs executed concurrently")->check(CLI::PositiveNumber)->capture_default_str();
        seed_opts.push_back(sub->add_option("--seed", seed, "Seed for random initial guesses (overrides config)"));
        sub->callback([&inv, cmd = cmd] { inv.command = cmd; });
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : hbad::cli::config_error;
    }
    for (auto* opt : seed_opts) {
        if (opt->count() > 0) {
            inv.seed = seed;
        }
    }
    return hbad::cli::run_all(inv, std::cout, std::cerr);
}
