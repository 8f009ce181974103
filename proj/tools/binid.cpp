// binid: recursive parameter identification from binary-valued observations,
// adaptive prediction/tracking on top of it, and the canned experiments.
//
// Subcommands:
//   example <1|2|3>     run a canned experiment
//   run      --config   run a custom experiment from a config file
//   validate --config   parse + cross-check a config, print derived values
//
// Exit codes: 0 success, 1 runtime/validation failure, 2 usage error.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "binid/binid.hpp"

namespace {

struct Overrides {
    std::optional<long> steps;
    std::optional<int> seeds;
    std::optional<long> base_seed;
    std::optional<long> stride;
    std::string out_dir;
    bool no_plots = false;
};

void add_override_flags(CLI::App* cmd, Overrides& ov)
{
    cmd->add_option("--steps", ov.steps, "Override run.n");
    cmd->add_option("--seeds", ov.seeds, "Override run.seeds");
    cmd->add_option("--base-seed", ov.base_seed, "Override run.base_seed");
    cmd->add_option("--stride", ov.stride, "Override run.stride (0 = automatic)");
    cmd->add_option("--out", ov.out_dir, "Output directory");
    cmd->add_flag("--no-plots", ov.no_plots, "Skip gnuplot script generation");
}

void apply_overrides(binid::ExperimentConfig& cfg, const Overrides& ov)
{
    if (ov.steps)
        cfg.n = *ov.steps;
    if (ov.seeds)
        cfg.seeds = *ov.seeds;
    if (ov.base_seed)
        cfg.base_seed = static_cast<std::uint64_t>(*ov.base_seed);
    if (ov.stride)
        cfg.stride = *ov.stride;
    if (!ov.out_dir.empty())
        cfg.out_dir = ov.out_dir;
    if (ov.no_plots)
        cfg.emit_plots = false;
}

std::filesystem::path resolve_out_dir(const binid::ExperimentConfig& cfg,
                                      const std::string& default_leaf)
{
    if (!cfg.out_dir.empty())
        return cfg.out_dir;
    if (const char* env = std::getenv("BINID_OUT"))
        return std::filesystem::path(env) / default_leaf;
    return std::filesystem::path("out") / default_leaf;
}

void print_derived(const binid::BuiltExperiment& ex)
{
    std::cout << "dimension p        = " << ex.p << "\n";
    std::cout << "L = sup ||x||, x in D = " << ex.domain_norm_bound << "\n";
    std::cout << "schedule radius L*M+C = " << ex.schedule_radius << "\n";
    std::cout << "beta0 admissible in (0, " << ex.beta0_bound << ")\n";
    std::cout << "beta schedule preview:";
    double beta = ex.cfg.beta0;
    for (long k = 0; k < 10; ++k) {
        std::cout << ' ' << beta;
        beta = std::min(beta, ex.noise.inf_density(k + 2, ex.schedule_radius));
    }
    std::cout << "\n";
}

void print_summary(const binid::ExperimentResult& result)
{
    const auto stats = binid::summarize(result.replications);
    if (stats.empty()) {
        std::cout << "no checkpoints (run.n below the first checkpoint index)\n";
        return;
    }
    std::cout << "median across seeds (q25, q75):\n";
    long last_n = -1;
    for (const binid::SummaryStat& st : stats) {
        if (st.n != last_n) {
            std::cout << "  n = " << st.n << "\n";
            last_n = st.n;
        }
        std::cout << "    " << st.metric << " = " << st.median << "  (" << st.q25 << ", "
                  << st.q75 << ")\n";
    }
    std::uint64_t phi_violations = 0;
    for (const auto& rep : result.replications)
        phi_violations += rep.phi_bound_violations;
    if (phi_violations > 0)
        std::cout << "note: ||phi|| exceeded bounds.M " << phi_violations
                  << " times across replications (audited per seed in summary.csv)\n";
}

int run_built(binid::ExperimentConfig cfg, const std::string& default_leaf,
              bool write_generated_config)
{
    const std::filesystem::path out_dir = resolve_out_dir(cfg, default_leaf);
    cfg.out_dir = out_dir.string();
    const binid::BuiltExperiment ex = binid::build_experiment(cfg);

    std::filesystem::create_directories(out_dir);
    if (write_generated_config)
        binid::write_config_file(cfg, (out_dir / "config.cfg").string());

    const binid::ExperimentResult result = binid::run_experiment(ex, out_dir);
    if (cfg.emit_plots && cfg.seeds > 0) {
        const std::string first_trace = "trace_seed" + std::to_string(cfg.base_seed) + ".csv";
        binid::emit_gnuplot_scripts(out_dir, first_trace, ex.p, cfg.control_enabled);
    }
    std::cout << "wrote " << result.trace_files.size() << " trace file(s) to " << out_dir.string()
              << "\n";
    print_summary(result);
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"recursive identification with binary-valued observations"};
    app.require_subcommand(1);

    int example_id = 0;
    Overrides example_ov;
    CLI::App* example_cmd =
        app.add_subcommand("example", "Run one of the three canned experiments");
    example_cmd->add_option("id", example_id, "Experiment id (1, 2 or 3)")->required();
    add_override_flags(example_cmd, example_ov);

    std::string run_config;
    Overrides run_ov;
    CLI::App* run_cmd = app.add_subcommand("run", "Run an experiment from a config file");
    run_cmd->add_option("--config", run_config, "Config file path")->required();
    add_override_flags(run_cmd, run_ov);

    std::string validate_config;
    CLI::App* validate_cmd =
        app.add_subcommand("validate", "Check a config file and print derived quantities");
    validate_cmd->add_option("--config", validate_config, "Config file path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (example_cmd->parsed()) {
            if (example_id < 1 || example_id > 3) {
                std::cerr << "usage error: example id must be 1, 2 or 3\n";
                return 2;
            }
            binid::ExperimentConfig cfg = binid::example_config(example_id);
            apply_overrides(cfg, example_ov);
            return run_built(std::move(cfg), "example" + std::to_string(example_id), true);
        }
        if (run_cmd->parsed()) {
            binid::ExperimentConfig cfg = binid::load_config(run_config);
            apply_overrides(cfg, run_ov);
            return run_built(std::move(cfg), "run", false);
        }
        if (validate_cmd->parsed()) {
            const binid::ExperimentConfig cfg = binid::load_config(validate_config);
            const binid::BuiltExperiment ex = binid::build_experiment(cfg);
            print_derived(ex);
            std::cout << "config ok\n";
            return 0;
        }
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    }
    return 2;
}
