// hybridkinetics {simulate|ensemble|bench|validate}

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "hybridkinetics/commands.hpp"

namespace hk = hybridkinetics;

namespace {

void add_model_flags(CLI::App* cmd, hk::RunConfig& cfg) {
    auto* model = cmd->add_option("--model", cfg.model_path, "model file in the .rxn format");
    auto* builtin = cmd->add_option("--builtin", cfg.builtin, "cook | lambda_phage_a | lambda_phage_b");
    model->excludes(builtin);
}

void add_run_flags(CLI::App* cmd, hk::RunConfig& cfg, std::string& engine) {
    add_model_flags(cmd, cfg);
    cmd->add_option("--engine", engine, "ssa | pdmp | ode")->capture_default_str();
    cmd->add_option("--tmax", cfg.t_max, "final time")->capture_default_str();
    cmd->add_option("--seed", cfg.seed, "master seed")->capture_default_str();
    cmd->add_option("--samples", cfg.samples, "grid points on [0, tmax]")->capture_default_str();
    cmd->add_option("--out", cfg.out, "output path (default: stdout)");
    cmd->add_flag("--record-jumps", cfg.record_jumps, "also write <out>.jumps.csv");
    cmd->add_flag("--no-displacement{false}", cfg.displacement, "pdmp: jumps leave x_C untouched");
    cmd->add_option("--rtol", cfg.rtol, "integrator relative tolerance")->capture_default_str();
    cmd->add_option("--atol", cfg.atol, "integrator absolute tolerance")->capture_default_str();
    cmd->add_flag("--gnuplot", cfg.gnuplot, "also write <out>.gp");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stochastic, deterministic and hybrid simulation of reaction networks"};
    app.require_subcommand(1);

    hk::RunConfig cfg;
    std::string engine = "ssa";
    std::string baseline = "ssa";

    auto* simulate = app.add_subcommand("simulate", "one trajectory as CSV");
    add_run_flags(simulate, cfg, engine);

    auto* ensemble = app.add_subcommand("ensemble", "per-grid-point mean/var/min/max over --runs trajectories");
    add_run_flags(ensemble, cfg, engine);
    ensemble->add_option("--runs", cfg.runs, "ensemble size")->capture_default_str();

    auto* bench = app.add_subcommand("bench", "wall time of --baseline against --engine");
    add_run_flags(bench, cfg, engine);
    bench->add_option("--baseline", baseline, "reference engine")->capture_default_str();
    bench->add_option("--repeats", cfg.repeats, "timed repeats per engine")->capture_default_str();

    auto* validate = app.add_subcommand("validate", "diagnostics, classification and conservation laws");
    add_model_flags(validate, cfg);

    try {
        app.parse(argc, argv);
        cfg.engine = hk::parse_engine(engine);
        cfg.baseline = hk::parse_engine(baseline);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : hk::kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return hk::kExitRuntime;
    }

    if (bench->parsed() && !bench->count("--engine")) cfg.engine = hk::Engine::pdmp;

    if (simulate->parsed()) return hk::cmd_simulate(cfg, std::cout, std::cerr);
    if (ensemble->parsed()) return hk::cmd_ensemble(cfg, std::cout, std::cerr);
    if (bench->parsed()) return hk::cmd_bench(cfg, std::cout, std::cerr);
    return hk::cmd_validate(cfg, std::cout, std::cerr);
}
