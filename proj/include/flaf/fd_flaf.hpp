#pragma once

#include "flaf/expansions.hpp"
#include "flaf/spectral.hpp"

#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <vector>

namespace flaf {

/// Adaptation parameters shared by every frequency-domain branch.
struct FreqParams {
    double mu = 0.5;          // base step size
    double lambda = 0.9;      // forgetting factor of the per-bin power estimate
    double reg = 1e-6;        // regularizer in mu / (reg + B(m))
    double power_init = 1e-3; // B_0(m) for every bin
    bool constrained = true;  // gradient constraint on/off

    void validate() const;
};

struct BlockOutput {
    std::vector<double> y;
    std::vector<double> e;
    std::vector<double> y_nl; // nonlinear branch contribution to y
    bool skipped = false;     // non-finite input, block ignored
};

struct TimeWeights {
    std::vector<double> linear;
    std::vector<double> nonlinear; // sample-major (tap i, channel j) -> i*Q + j
};

/// Real multiplications charged for one real transform of size n (n log2 n).
std::uint64_t transform_mults(std::size_t n);

/// One overlap-save branch with per-bin normalized step sizes.
class FreqBranch {
public:
    FreqBranch(std::size_t filter_len, std::size_t hop, const FreqParams& params);

    std::size_t filter_len() const { return buf_.filter_len(); }
    std::size_t hop() const { return buf_.hop(); }
    std::size_t n_fft() const { return buf_.n_fft(); }

    /// Push a block and add the branch output to y.
    void filter(std::span<const double> block, std::span<double> y);
    /// Update with the error spectrum E = FFT([0; e]) of this branch's size.
    void adapt(const Spectrum& error_spectrum);

    /// Filter a second input stream through the same weights (own history).
    void filter_aux(std::span<const double> block, std::span<double> y);

    const Spectrum& weights() const { return W_; }
    const Spectrum& last_input_spectrum() const { return X_; }
    std::span<const double> power() const { return power_; }

    std::vector<double> taps() const;
    void set_taps(std::span<const double> taps);

    std::uint64_t multiplications() const { return mults_; }

private:
    RealFft fft_;
    OverlapSaveBuffer buf_;
    std::optional<OverlapSaveBuffer> aux_buf_;
    FreqParams params_;
    Spectrum W_;
    Spectrum X_;
    Spectrum scratch_spec_;
    std::vector<double> power_;
    std::vector<double> frame_;
    std::uint64_t mults_ = 0;
};

/// Memoryless weight layer over random vector features, adapted as a block
/// NLMS with a separate power estimate per feature. The combined step grows
/// with the number of features, so mu * M_re must stay well below 2.
class FeatureBranch {
public:
    FeatureBranch(std::size_t dim, const FreqParams& params);

    void filter(const ExpandedFrame& frame, std::span<double> y);
    void adapt(std::span<const double> e);

    std::span<const double> weights() const { return w_; }
    void set_weights(std::span<const double> w);
    std::span<const double> power() const { return power_; }
    std::uint64_t multiplications() const { return mults_; }

private:
    FreqParams params_;
    std::vector<double> w_;
    std::vector<double> power_;
    ExpandedFrame frame_;
    std::uint64_t mults_ = 0;
};

/// Forward transform of [0 ... 0, e] for each distinct transform size, so
/// branches of equal size share one error spectrum per block.
class ErrorSpectra {
public:
    const Spectrum& get(std::size_t n_fft, std::span<const double> e);
    void clear() { cache_.clear(); }
    std::uint64_t multiplications() const { return mults_; }

private:
    std::deque<Spectrum> cache_;
    std::uint64_t mults_ = 0;
};

struct FdFlafConfig {
    std::size_t filter_len = 0; // M
    std::size_t hop = 0;        // L
    std::optional<ExpansionConfig> expansion;
    FreqParams linear;
    FreqParams nonlinear;
};

/// Overlap-save frequency-domain FLAF: a linear branch plus Q per-channel
/// nonlinear branches of M_i taps (or one feature branch for random vector
/// expansions), all advancing by the same hop.
class FdFlaf {
public:
    explicit FdFlaf(const FdFlafConfig& config);

    BlockOutput process_block(std::span<const double> x, std::span<const double> d);

    TimeWeights equivalent_time_weights() const;
    void set_time_weights(std::span<const double> linear, std::span<const double> nonlinear);

    const FdFlafConfig& config() const { return config_; }
    const FreqBranch& linear_branch() const { return linear_; }
    std::span<const FreqBranch> channel_branches() const { return channels_; }
    const FeatureBranch* feature_branch() const { return features_ ? &*features_ : nullptr; }
    const Expander* expander() const { return expander_ ? &*expander_ : nullptr; }

    std::uint64_t skipped_blocks() const { return skipped_; }
    std::uint64_t multiplications() const;

private:
    FdFlafConfig config_;
    FreqBranch linear_;
    std::optional<Expander> expander_;
    std::vector<FreqBranch> channels_;
    std::optional<FeatureBranch> features_;
    ErrorSpectra error_spectra_;
    std::uint64_t skipped_ = 0;
    std::uint64_t ae_mults_ = 0;
};

namespace detail {
bool all_finite(std::span<const double> v);
void check_divergence(const Spectrum& W);
/// -|x| * phi_j(x) channels used for the exponential-factor gradient.
ExpandedFrame ae_derivative_frame(const ExpandedFrame& frame, std::span<const double> x);
} // namespace detail

} // namespace flaf
