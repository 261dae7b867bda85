#pragma once

#include "flaf/expansions.hpp"
#include "flaf/metrics.hpp"
#include "flaf/scenario.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace flaf {

enum class Algorithm { LinearPbfdaf, FdFlaf, PbfdFlaf, FlafTd };

std::string_view to_string(Algorithm a);
std::optional<Algorithm> parse_algorithm(std::string_view name);

struct AlgorithmSpec {
    std::string label; // empty: derived from algorithm and expansion
    Algorithm algorithm = Algorithm::PbfdFlaf;
    std::optional<ExpansionConfig> expansion; // input_len is overwritten by M_i
    double mu_lin = 0.01;
    double mu_nl = 0.001;
    double lambda = 0.9;
    double reg = 1e-3;
    double power_init = 1e-3;
    std::size_t M = 300;
    std::size_t M_i = 128;
    std::size_t L = 0; // 0: M for fd-flaf, ceil(M / M_P) for the partitioned filters
    std::size_t M_P = 4;
    bool constrained = true;

    std::string display_label() const;
    /// Instantiates the filter once; throws ConfigError on invalid settings.
    void validate() const;
};

struct ExperimentConfig {
    std::string name = "experiment";
    ScenarioConfig scenario;
    std::vector<AlgorithmSpec> algorithms;
    std::filesystem::path output_dir = "out";
    bool report_ops = true;
    ErleOptions erle;
};

/// Parses a YAML experiment description. Unknown keys, malformed values and
/// invalid settings raise ConfigError carrying "<source>:<line>: ".
ExperimentConfig parse_experiment(std::string_view yaml_text, std::string_view source_name = "<config>");
ExperimentConfig load_experiment(const std::filesystem::path& path);

std::vector<std::string> preset_names();
/// YAML text of a built-in preset; throws ConfigError for unknown names.
std::string preset_yaml(std::string_view name);
std::string_view preset_description(std::string_view name);

struct AlgorithmResult {
    std::string label;
    AlgorithmSpec spec;
    std::vector<double> e;
    ErleTrace erle;
    std::uint64_t multiplications = 0;
    std::uint64_t expansion_multiplications = 0;
    std::uint64_t skipped_blocks = 0;
    std::size_t samples = 0;   // stream samples covered before any divergence
    std::size_t processed = 0; // samples fed to the filter, zero padding of the last block included
    bool diverged = false;
    double wall_seconds = 0.0;

    double mults_per_sample() const;
    double expansion_mults_per_sample() const;
};

AlgorithmResult run_algorithm(const AlgorithmSpec& spec, const ScenarioStream& stream, const ErleOptions& erle);
std::vector<AlgorithmResult> run_experiment(const ExperimentConfig& config);
/// Results ordered by mean ERLE, best first; diverged runs last.
std::vector<const AlgorithmResult*> ranked(const std::vector<AlgorithmResult>& results);

/// Shortest round-trip decimal form.
std::string format_number(double v);
/// RFC 4180 field quoting.
std::string csv_field(std::string_view s);

std::string trace_csv(const AlgorithmResult& result);
std::string summary_csv(const std::vector<AlgorithmResult>& results, bool report_ops);
/// File name used for an algorithm trace inside the output directory.
std::string trace_file_name(std::string_view label);
/// Writes one trace per algorithm and summary.csv; returns the written paths.
std::vector<std::filesystem::path> write_results(const std::vector<AlgorithmResult>& results,
                                                 const std::filesystem::path& dir, bool report_ops);

struct AnalyzeCorrOptions {
    std::size_t M = 64;
    std::size_t L = 64;
    std::size_t M_P = 2;
    std::vector<std::size_t> bins; // empty: every bin of the half spectrum
    std::size_t n_blocks = 5000;
    std::uint64_t seed = 1;
};

/// CSV rows bin,alpha_re,alpha_im,alpha_abs,cond_est,cond_model over white noise.
std::string analyze_corr_csv(const AnalyzeCorrOptions& options);

} // namespace flaf
