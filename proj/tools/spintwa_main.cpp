#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "spintwa/oracle.hpp"
#include "spintwa/runner.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::optional<uint64_t> seed;
    std::optional<int> workers;
    std::optional<std::string> out;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "path to a JSON run configuration")
        ->required();
    cmd->add_option("--seed", args.seed, "override the master seed");
    cmd->add_option("--workers", args.workers, "number of worker threads");
    cmd->add_option("--out", args.out, "output directory (overrides config)");
}

int dispatch(const CommonArgs& args, int (*runner)(const spintwa::RunConfig&, const std::string&)) {
    spintwa::RunConfig cfg;
    try {
        cfg = spintwa::load_run_config(args.config_path);
    } catch (const spintwa::ModelError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return spintwa::kExitConfig;
    }
    if (args.seed) cfg.integrator.master_seed = *args.seed;
    if (args.workers) cfg.integrator.n_workers = *args.workers;
    const std::string out_dir = args.out.value_or(cfg.output_dir);
    try {
        return runner(cfg, out_dir);
    } catch (const spintwa::ModelError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return spintwa::kExitConfig;
    } catch (const spintwa::oracle::OracleError& e) {
        std::cerr << "oracle error: " << e.what() << "\n";
        return spintwa::kExitOracleDim;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"stochastic phase-space simulator for dissipative collective spin systems"};
    app.require_subcommand(1);

    CommonArgs sim_args, bench_args, sweep_args;
    CLI::App* sim = app.add_subcommand("simulate", "run trajectories and write observables");
    add_common(sim, sim_args);
    CLI::App* bench = app.add_subcommand(
        "benchmark", "run trajectories and the exact master equation, compare");
    add_common(bench, bench_args);
    CLI::App* sweep = app.add_subcommand("sweep", "scan a model parameter, steady-state table");
    add_common(sweep, sweep_args);

    CLI11_PARSE(app, argc, argv);

    if (sim->parsed()) return dispatch(sim_args, spintwa::run_simulate);
    if (bench->parsed()) return dispatch(bench_args, spintwa::run_benchmark);
    return dispatch(sweep_args, spintwa::run_sweep);
}
