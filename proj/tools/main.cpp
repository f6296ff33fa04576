#include "srl/cli_io.hpp"

#include <CLI11.hpp>

#include <optional>
#include <string>

int main(int argc, char** argv) {
    CLI::App app{"Simulation and verification of heavy-tailed stochastic recursions"};
    app.require_subcommand(1);
    std::string config, out = ".";
    std::optional<std::uint64_t> seed;
    unsigned workers = 1;
    for (const auto& name : srl::io::actions()) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config, "experiment config (JSON)")->required();
        sub->add_option("--seed", seed, "master seed (overrides config.seed)");
        sub->add_option("--workers", workers, "worker threads (0 = all cores)");
        sub->add_option("--out", out, "output directory");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    const std::string action = app.get_subcommands().front()->get_name();
    return srl::io::run_cli(action, config, seed, workers, out);
}
