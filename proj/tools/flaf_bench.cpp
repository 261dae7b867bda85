// Benchmark runner for the split functional link filters.
//
//   flaf_bench run config.yaml
//   flaf_bench run --preset table2
//   flaf_bench analyze-corr --M 64 --L 32 --M_P 4 --bins 0,1,2
//   flaf_bench presets list | presets show table2
//
// FLAF_OUTPUT_DIR, when set, replaces the output_dir of the configuration.

#include "flaf/error.hpp"
#include "flaf/experiment.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <iostream>

namespace {

int cmd_run(const std::string& config_path, const std::string& preset, const std::string& out_override)
{
    flaf::ExperimentConfig cfg = preset.empty() ? flaf::load_experiment(config_path)
                                                : flaf::parse_experiment(flaf::preset_yaml(preset), "preset:" + preset);
    if (const char* env = std::getenv("FLAF_OUTPUT_DIR"); env && *env) cfg.output_dir = env;
    if (!out_override.empty()) cfg.output_dir = out_override;

    const auto results = flaf::run_experiment(cfg);
    flaf::write_results(results, cfg.output_dir, cfg.report_ops);

    std::printf("%-36s %10s %10s %14s %9s\n", "algorithm", "ERLE dB", "(no warm)", "mults/sample", "wall s");
    bool any_diverged = false;
    for (const auto* r : flaf::ranked(results)) {
        std::printf("%-36s %10.2f %10.2f %14.1f %9.3f%s\n", r->label.c_str(), r->erle.mean_db, r->erle.mean_db_all,
                    r->mults_per_sample(), r->wall_seconds, r->diverged ? "  DIVERGED" : "");
        any_diverged = any_diverged || r->diverged;
    }
    std::printf("results written to %s\n", cfg.output_dir.string().c_str());
    return any_diverged ? 3 : 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Functional link adaptive filter benchmarks"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "run an experiment from a YAML config or a preset");
    std::string config_path, preset, out_dir;
    run->add_option("config", config_path, "experiment YAML file");
    run->add_option("--preset", preset, "built-in preset name");
    run->add_option("-o,--output-dir", out_dir, "output directory (overrides config and FLAF_OUTPUT_DIR)");

    auto* corr = app.add_subcommand("analyze-corr", "per-bin partition correlation of white noise");
    flaf::AnalyzeCorrOptions co;
    corr->add_option("--M", co.M, "samples per partition")->capture_default_str();
    corr->add_option("--L", co.L, "hop (M must be a multiple of L)")->capture_default_str();
    corr->add_option("--M_P", co.M_P, "number of partitions")->capture_default_str();
    corr->add_option("--bins", co.bins, "comma-separated bin indices (default: all)")->delimiter(',');
    corr->add_option("--n_blocks", co.n_blocks, "Monte-Carlo blocks")->capture_default_str();
    corr->add_option("--seed", co.seed, "noise seed")->capture_default_str();

    auto* presets = app.add_subcommand("presets", "list or print built-in presets");
    presets->require_subcommand(1);
    presets->add_subcommand("list", "list preset names");
    auto* show = presets->add_subcommand("show", "print the YAML of a preset");
    std::string show_name;
    show->add_option("name", show_name, "preset name")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            if (config_path.empty() == preset.empty()) {
                std::cerr << "run: give either a config file or --preset\n";
                return 2;
            }
            return cmd_run(config_path, preset, out_dir);
        }
        if (*corr) {
            std::cout << flaf::analyze_corr_csv(co);
            return 0;
        }
        if (presets->got_subcommand("list")) {
            for (const auto& name : flaf::preset_names())
                std::cout << name << "\t" << flaf::preset_description(name) << "\n";
            return 0;
        }
        if (*show) {
            std::cout << flaf::preset_yaml(show_name);
            return 0;
        }
    } catch (const flaf::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const flaf::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
