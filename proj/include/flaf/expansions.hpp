#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace flaf {

enum class ExpansionKind { Chebyshev, Legendre, Trigonometric, RandomVector, AdaptiveExponential };

std::string_view to_string(ExpansionKind kind);
std::optional<ExpansionKind> parse_expansion_kind(std::string_view name);

/// Upper clamp for the adaptive exponential factor a[n].
inline constexpr double kAeFactorMax = 20.0;

struct ExpansionConfig {
    ExpansionKind kind = ExpansionKind::Trigonometric;
    std::size_t order = 1;        // P
    std::size_t input_len = 1;    // M_i, samples seen by the expansion
    std::size_t expanded_len = 0; // M_re, RandomVector only
    std::uint64_t seed = 0;       // RandomVector only
    double ae_step = 0.0;         // mu_a, AdaptiveExponential only
    double ae_init = 0.0;         // a_0, AdaptiveExponential only

    /// Number of functional links Q applied to each input sample.
    std::size_t channels() const;
    /// Length M_re of the expanded vector g_n.
    std::size_t feature_len() const;
    /// Throws ConfigError when the configuration violates its invariants.
    void validate() const;
};

struct OpCounter {
    std::uint64_t multiplications = 0;
    std::uint64_t additions = 0;
    std::uint64_t function_evals = 0;

    OpCounter& operator+=(const OpCounter& other);
    friend bool operator==(const OpCounter&, const OpCounter&) = default;
};

/// Per-iteration cost of expanding a full M_i input vector.
///
/// Multiplications follow the closed-form counts of the functional link cost
/// table; additions and function evaluations follow the accompanying
/// breakdown where one is given and are zero otherwise.
OpCounter predicted_cost(const ExpansionConfig& config);
std::uint64_t predicted_mul_count(const ExpansionConfig& config);

/// Q-channel block of expanded samples.
///
/// Channel j holds phi_j applied to each sample of the block. For the random
/// vector expansion there is a single channel carrying one M_re feature
/// vector per sample, serialized sample after sample.
class ExpandedFrame {
public:
    ExpandedFrame() = default;
    ExpandedFrame(std::size_t channels, std::size_t samples, std::size_t feature_dim = 1);

    std::size_t channel_count() const { return channels_; }
    std::size_t samples() const { return samples_; }
    std::size_t feature_dim() const { return feature_dim_; }

    std::span<double> channel(std::size_t j);
    std::span<const double> channel(std::size_t j) const;

    /// Features of sample i (random vector layout).
    std::span<const double> features(std::size_t i) const;

    /// Sample-major flattening: all channels of sample 0, then sample 1, ...
    std::vector<double> interleaved() const;

private:
    std::size_t channels_ = 0;
    std::size_t samples_ = 0;
    std::size_t feature_dim_ = 1;
    std::vector<double> data_;
};

/// Functional link expansion block with its streaming state.
///
/// Single-writer: one stream per instance.
class Expander {
public:
    explicit Expander(const ExpansionConfig& config);
    /// Random vector expander with explicit V (row-major M_re x M_i) and b.
    Expander(const ExpansionConfig& config, std::vector<double> rv_weights, std::vector<double> rv_bias);

    const ExpansionConfig& config() const { return config_; }
    std::size_t channels() const { return config_.channels(); }

    /// phi_0(x) .. phi_{Q-1}(x). Not available for RandomVector.
    std::vector<double> expand_sample(double x);
    void expand_sample(double x, std::span<double> out);

    ExpandedFrame expand_block(std::span<const double> block);

    /// Full g_n for x_recent[i] = x[n-i] at the current state, sample-major.
    /// Does not touch the operation counter.
    void expand_history(std::span<const double> x_recent, std::span<double> g) const;

    /// d y / d a of the nonlinear branch output at the current a[n].
    ///
    /// x_recent[i] = x[n-i]; weights are laid out sample-major (index i*Q + j),
    /// the same order as the expanded vector g_n.
    double ae_output_gradient(std::span<const double> x_recent, std::span<const double> weights) const;

    /// One gradient-descent step on a[n]; returns the new factor.
    double ae_adapt(std::span<const double> x_recent, double error, std::span<const double> weights);
    /// Step driven by a precomputed sum of e[n] * dy[n]/da.
    double ae_apply_gradient(double error_times_gradient);

    double ae_factor() const { return ae_factor_; }
    void set_ae_factor(double a);
    bool ae_warning() const { return ae_warning_; }

    const OpCounter& ops() const { return ops_; }
    void reset_ops() { ops_ = {}; }
    std::uint64_t saturations() const { return saturations_; }

    const std::vector<double>& rv_weights() const { return rv_weights_; }
    const std::vector<double>& rv_bias() const { return rv_bias_; }

private:
    double sanitize(double x);
    void evaluate(double x, std::span<double> out) const;
    void rv_features(std::span<double> out);

    ExpansionConfig config_;
    std::vector<double> rv_weights_;
    std::vector<double> rv_bias_;
    std::vector<double> rv_history_; // x[n], x[n-1], ... (M_i samples)
    double ae_factor_ = 0.0;
    bool ae_warning_ = false;
    std::uint64_t saturations_ = 0;
    OpCounter ops_;
    OpCounter per_sample_cost_;
};

} // namespace flaf
