// Command-line driver: five subcommands sharing one config format.
// Exit codes: 0 success, 2 config error (nothing written), 3 partial
// results, 4 runtime failure.

#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "plasim/commands.hpp"
#include "plasim/errors.hpp"

namespace {

struct Shared {
    std::string config_path;
    std::string out_override;
    std::uint64_t seed_override = 0;
    bool seed_given = false;
    int threads_override = -1;
};

void add_common(CLI::App* cmd, Shared& shared) {
    cmd->add_option("--config", shared.config_path, "run configuration file")
        ->required();
    cmd->add_option("--seed", shared.seed_override,
                    "override [run] seed")
        ->each([&](const std::string&) { shared.seed_given = true; });
    cmd->add_option("--out", shared.out_override, "override [run] out");
    cmd->add_option("--threads", shared.threads_override,
                    "override [run] threads (0 = hardware)");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"propagator measurement and least-action analysis toolkit"};
    app.require_subcommand(1);

    Shared shared;
    const char* names[] = {"propagator-scan", "trajectory", "robustness",
                           "g2", "wavefunction"};
    const char* descriptions[] = {
        "simulate pointer scans and reconstruct the propagator",
        "extract the measured least-action trajectory over a z list",
        "perturbed-curve overlap fidelity sweep",
        "three-detector coincidence statistics",
        "direct wavefunction measurement via a momentum pointer"};
    for (int i = 0; i < 5; ++i)
        add_common(app.add_subcommand(names[i], descriptions[i]), shared);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // Bad usage is a configuration problem; keep the exit contract.
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return 2;
    }

    try {
        plasim::RunConfig config = plasim::load_config(shared.config_path);
        if (shared.seed_given) config.seed = shared.seed_override;
        if (!shared.out_override.empty()) config.out = shared.out_override;
        if (shared.threads_override >= 0) config.threads = shared.threads_override;
        return plasim::dispatch_command(app.get_subcommands().front()->get_name(),
                                        config);
    } catch (const plasim::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const plasim::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    }
}
