#include "phi4n/runner.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <string>

int main(int argc, char** argv) {
    CLI::App app{"lattice dynamics, limit-law oracle and 1/N expansion for the Wick-renormalized vector phi^4 model on the 2-torus"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::string out_override;
    std::uint64_t seed_override = 0;
    int threads_override = 0;
    auto* config_opt = app.add_option("-c,--config", config_path, "JSON run configuration");
    auto* out_opt = app.add_option("--out", out_override, "output directory override");
    auto* seed_opt = app.add_option("--seed", seed_override, "seed override");
    auto* threads_opt = app.add_option("--threads", threads_override, "worker thread override")
                            ->check(CLI::Range(1, 256));

    app.add_subcommand("kernels", "dump the deterministic kernel tables and constants");
    app.add_subcommand("simulate", "run one chain and record observable time series");
    app.add_subcommand("estimate", "turn a recorded series into batch-mean estimates");
    app.add_subcommand("oracle", "print closed-form limit predictions");
    auto* expand_cmd = app.add_subcommand("expand", "mechanical 1/N expansion term table");
    int expand_k = 2;
    int expand_order = 0;
    expand_cmd->add_option("-k,--points", expand_k, "number of observable points")->check(CLI::Range(1, 4));
    expand_cmd->add_option("-p,--order", expand_order, "expansion order")->check(CLI::Range(0, 1));
    app.add_subcommand("verify", "run the deterministic identity suite");
    app.add_subcommand("compare", "chains across the N list against oracle predictions");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        phi4n::RunConfig cfg;
        if (config_opt->count() > 0)
            cfg = phi4n::load_config(config_path);
        if (out_opt->count() > 0)
            cfg.output_dir = out_override;
        if (seed_opt->count() > 0)
            cfg.seed = seed_override;
        if (threads_opt->count() > 0)
            cfg.threads = threads_override;

        const std::string cmd = app.get_subcommands().at(0)->get_name();
        if (cmd == "kernels")
            return phi4n::run_kernels(cfg);
        if (cmd == "simulate")
            return phi4n::run_simulate(cfg);
        if (cmd == "estimate")
            return phi4n::run_estimate(cfg);
        if (cmd == "oracle")
            return phi4n::run_oracle(cfg);
        if (cmd == "expand")
            return phi4n::run_expand(cfg, expand_k, expand_order);
        if (cmd == "verify")
            return phi4n::run_verify(cfg);
        if (cmd == "compare")
            return phi4n::run_compare(cfg);
        std::fprintf(stderr, "error: unknown subcommand %s\n", cmd.c_str());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
