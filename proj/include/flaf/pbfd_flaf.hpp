#pragma once

#include "flaf/expansions.hpp"
#include "flaf/fd_flaf.hpp"
#include "flaf/spectral.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace flaf {

/// Uniformly partitioned overlap-save branch.
///
/// The filter of length `filter_len` is split into `count` partitions of
/// `hop` taps (the last one possibly shorter). Partition l multiplies the
/// input spectrum from l hops ago, so output is available after a single hop
/// whatever the partition count. A single partition may be longer than the
/// hop, which makes the branch an ordinary overlap-save filter.
class PartitionedBranch {
public:
    PartitionedBranch(std::size_t filter_len, std::size_t hop, std::size_t count, const FreqParams& params);

    std::size_t filter_len() const { return filter_len_; }
    std::size_t part_len() const { return part_len_; }
    std::size_t hop() const { return hop_; }
    std::size_t count() const { return W_.size(); }
    std::size_t n_fft() const { return fft_.size(); }

    void filter(std::span<const double> block, std::span<double> y);
    void filter_aux(std::span<const double> block, std::span<double> y);
    void adapt(const Spectrum& error_spectrum);

    const Spectrum& partition(std::size_t l) const { return W_[l]; }
    /// Input spectrum from l hops ago.
    const Spectrum& delayed_input(std::size_t l) const { return main_.at(l); }
    std::span<const double> power() const { return power_; }

    std::vector<double> taps() const;
    void set_taps(std::span<const double> taps);

    std::uint64_t multiplications() const { return mults_; }

private:
    struct DelayLine {
        std::vector<double> history;
        std::vector<Spectrum> ring;
        std::size_t head = 0;

        DelayLine(std::size_t n_fft, std::size_t count);
        void push(std::span<const double> block, const RealFft& fft);
        const Spectrum& at(std::size_t l) const { return ring[(head + l) % ring.size()]; }
    };

    std::size_t keep(std::size_t l) const;
    void accumulate_output(const DelayLine& line, std::span<double> y);

    std::size_t filter_len_;
    std::size_t part_len_;
    std::size_t hop_;
    RealFft fft_;
    FreqParams params_;
    std::vector<Spectrum> W_;
    DelayLine main_;
    std::optional<DelayLine> aux_;
    std::vector<double> power_;
    Spectrum acc_;
    std::vector<double> frame_;
    std::uint64_t mults_ = 0;
};

struct PbfdFlafConfig {
    std::size_t filter_len = 0; // M
    std::size_t partitions = 1; // M_P
    std::size_t hop = 0;        // L; 0 selects ceil(M / M_P)
    std::optional<ExpansionConfig> expansion;
    FreqParams linear;
    FreqParams nonlinear;

    /// Hop actually used once the default has been resolved.
    std::size_t resolved_hop() const;
};

/// Partitioned-block frequency-domain FLAF.
class PbfdFlaf {
public:
    explicit PbfdFlaf(const PbfdFlafConfig& config);

    BlockOutput process_block(std::span<const double> x, std::span<const double> d);

    TimeWeights equivalent_time_weights() const;
    void set_time_weights(std::span<const double> linear, std::span<const double> nonlinear);

    std::size_t hop() const { return linear_.hop(); }
    const PbfdFlafConfig& config() const { return config_; }
    const PartitionedBranch& linear_branch() const { return linear_; }
    std::span<const PartitionedBranch> channel_branches() const { return channels_; }
    const FeatureBranch* feature_branch() const { return features_ ? &*features_ : nullptr; }
    const Expander* expander() const { return expander_ ? &*expander_ : nullptr; }

    std::uint64_t skipped_blocks() const { return skipped_; }
    std::uint64_t multiplications() const;

private:
    PbfdFlafConfig config_;
    PartitionedBranch linear_;
    std::optional<Expander> expander_;
    std::vector<PartitionedBranch> channels_;
    std::optional<FeatureBranch> features_;
    ErrorSpectra error_spectra_;
    std::uint64_t skipped_ = 0;
    std::uint64_t ae_mults_ = 0;
};

} // namespace flaf
