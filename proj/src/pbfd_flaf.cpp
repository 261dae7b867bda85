#include "flaf/pbfd_flaf.hpp"

#include "flaf/error.hpp"

#include <algorithm>
#include <cmath>

namespace flaf {

namespace {

std::size_t partition_len(std::size_t filter_len, std::size_t hop, std::size_t count)
{
    if (filter_len < 1 || hop < 1 || count < 1) throw ConfigError("partitioned branch: sizes must be >= 1");
    if (count == 1) return filter_len;
    if (filter_len > count * hop || filter_len <= (count - 1) * hop)
        throw ConfigError("partitioned branch: filter length must satisfy (M_P - 1) * L < M <= M_P * L");
    return hop;
}

} // namespace

PartitionedBranch::DelayLine::DelayLine(std::size_t n_fft, std::size_t count)
    : history(n_fft, 0.0), ring(count, Spectrum(n_fft))
{
}

void PartitionedBranch::DelayLine::push(std::span<const double> block, const RealFft& fft)
{
    const auto hop = static_cast<std::ptrdiff_t>(block.size());
    std::copy(history.begin() + hop, history.end(), history.begin());
    std::copy(block.begin(), block.end(), history.end() - hop);
    head = (head + ring.size() - 1) % ring.size();
    fft.forward(history, ring[head].bins);
}

PartitionedBranch::PartitionedBranch(std::size_t filter_len, std::size_t hop, std::size_t count,
                                     const FreqParams& params)
    : filter_len_(filter_len), part_len_(partition_len(filter_len, hop, count)), hop_(hop),
      fft_(fft_size_for(part_len_, hop)), params_(params), W_(count, Spectrum(fft_.size())),
      main_(fft_.size(), count), power_(fft_.size() / 2 + 1, params.power_init), acc_(fft_.size()),
      frame_(fft_.size())
{
    params_.validate();
}

std::size_t PartitionedBranch::keep(std::size_t l) const
{
    return std::min(part_len_, filter_len_ - l * part_len_);
}

void PartitionedBranch::accumulate_output(const DelayLine& line, std::span<double> y)
{
    std::fill(acc_.bins.begin(), acc_.bins.end(), cplx{});
    for (std::size_t l = 0; l < W_.size(); ++l) {
        const auto& X = line.at(l);
        const auto& W = W_[l];
        for (std::size_t m = 0; m < acc_.size(); ++m) acc_.bins[m] += X.bins[m] * W.bins[m];
    }
    fft_.inverse(acc_.bins, frame_);
    const std::size_t off = n_fft() - hop_;
    for (std::size_t i = 0; i < hop_; ++i) y[i] += frame_[off + i];
    mults_ += 2 * transform_mults(n_fft()) + 4 * acc_.size() * W_.size();
}

void PartitionedBranch::filter(std::span<const double> block, std::span<double> y)
{
    if (block.size() != hop_) throw InvalidInput("partitioned branch: block length must equal the hop");
    main_.push(block, fft_);
    accumulate_output(main_, y);
}

void PartitionedBranch::filter_aux(std::span<const double> block, std::span<double> y)
{
    if (block.size() != hop_) throw InvalidInput("partitioned branch: block length must equal the hop");
    if (!aux_) aux_.emplace(n_fft(), W_.size());
    aux_->push(block, fft_);
    accumulate_output(*aux_, y);
}

void PartitionedBranch::adapt(const Spectrum& E)
{
    if (E.n_fft != n_fft()) throw InvalidInput("error spectrum size does not match the branch");
    const double lam = params_.lambda;
    const auto& newest = main_.at(0);
    std::vector<double> step(power_.size());
    for (std::size_t m = 0; m < power_.size(); ++m) {
        power_[m] = lam * power_[m] + (1.0 - lam) * std::norm(newest.bins[m]);
        step[m] = params_.mu / (params_.reg + power_[m]);
    }
    mults_ += 4 * power_.size();
    for (std::size_t l = 0; l < W_.size(); ++l) {
        const auto& X = main_.at(l);
        for (std::size_t m = 0; m < acc_.size(); ++m) acc_.bins[m] = step[m] * std::conj(X.bins[m]) * E.bins[m];
        mults_ += 6 * acc_.size();
        if (params_.constrained) {
            gradient_constrain_inplace(acc_, keep(l), fft_, frame_);
            mults_ += 2 * transform_mults(n_fft());
        }
        auto& W = W_[l];
        for (std::size_t m = 0; m < acc_.size(); ++m) W.bins[m] += acc_.bins[m];
        detail::check_divergence(W);
    }
}

std::vector<double> PartitionedBranch::taps() const
{
    std::vector<double> out;
    out.reserve(filter_len_);
    std::vector<double> t(n_fft());
    for (std::size_t l = 0; l < W_.size(); ++l) {
        fft_.inverse(W_[l].bins, t);
        out.insert(out.end(), t.begin(), t.begin() + static_cast<std::ptrdiff_t>(keep(l)));
    }
    return out;
}

void PartitionedBranch::set_taps(std::span<const double> taps)
{
    if (taps.size() != filter_len_) throw InvalidInput("set_taps: length must equal the filter length");
    std::vector<double> padded(n_fft());
    for (std::size_t l = 0; l < W_.size(); ++l) {
        std::fill(padded.begin(), padded.end(), 0.0);
        const auto first = taps.begin() + static_cast<std::ptrdiff_t>(l * part_len_);
        std::copy(first, first + static_cast<std::ptrdiff_t>(keep(l)), padded.begin());
        fft_.forward(padded, W_[l].bins);
    }
}

// ---------------------------------------------------------------------------

std::size_t PbfdFlafConfig::resolved_hop() const
{
    if (hop != 0) return hop;
    if (partitions <= 1) return filter_len;
    return (filter_len + partitions - 1) / partitions;
}

namespace {

const PbfdFlafConfig& validated(const PbfdFlafConfig& c)
{
    if (c.filter_len < 1) throw ConfigError("filter length M must be >= 1");
    if (c.partitions < 1) throw ConfigError("partition count M_P must be >= 1");
    const std::size_t hop = c.resolved_hop();
    if (c.partitions == 1 && hop > c.filter_len) throw ConfigError("block length L must satisfy L <= M");
    c.linear.validate();
    if (c.expansion) {
        c.expansion->validate();
        c.nonlinear.validate();
    }
    return c;
}

// A nonlinear channel of M_i taps is split into hop-sized partitions only
// when the filter is partitioned at all and M_i exceeds one hop.
std::size_t channel_partitions(const PbfdFlafConfig& c, std::size_t hop)
{
    const std::size_t mi = c.expansion->input_len;
    if (c.partitions == 1 || mi <= hop) return 1;
    return (mi + hop - 1) / hop;
}

} // namespace

PbfdFlaf::PbfdFlaf(const PbfdFlafConfig& config)
    : config_(validated(config)),
      linear_(config.filter_len, config.resolved_hop(), config.partitions, config.linear)
{
    if (!config_.expansion) return;
    const auto& ex = *config_.expansion;
    expander_.emplace(ex);
    if (ex.kind == ExpansionKind::RandomVector) {
        features_.emplace(ex.expanded_len, config_.nonlinear);
    } else {
        const std::size_t hop = linear_.hop();
        const std::size_t count = channel_partitions(config_, hop);
        channels_.reserve(ex.channels());
        for (std::size_t j = 0; j < ex.channels(); ++j)
            channels_.emplace_back(ex.input_len, hop, count, config_.nonlinear);
    }
}

BlockOutput PbfdFlaf::process_block(std::span<const double> x, std::span<const double> d)
{
    const std::size_t L = linear_.hop();
    if (x.size() != L || d.size() != L) throw InvalidInput("pb_process_block: blocks must hold exactly L samples");
    BlockOutput out;
    out.y.assign(L, 0.0);
    out.e.assign(L, 0.0);
    out.y_nl.assign(L, 0.0);
    if (!detail::all_finite(x) || !detail::all_finite(d)) {
        ++skipped_;
        out.skipped = true;
        return out;
    }

    linear_.filter(x, out.y);

    std::vector<double> dy_da;
    if (expander_) {
        const ExpandedFrame frame = expander_->expand_block(x);
        if (features_) {
            features_->filter(frame, out.y_nl);
        } else {
            for (std::size_t j = 0; j < channels_.size(); ++j) channels_[j].filter(frame.channel(j), out.y_nl);
        }
        if (expander_->config().kind == ExpansionKind::AdaptiveExponential) {
            const ExpandedFrame deriv = detail::ae_derivative_frame(frame, x);
            dy_da.assign(L, 0.0);
            for (std::size_t j = 0; j < channels_.size(); ++j) channels_[j].filter_aux(deriv.channel(j), dy_da);
        }
    }

    for (std::size_t i = 0; i < L; ++i) {
        out.y[i] += out.y_nl[i];
        out.e[i] = d[i] - out.y[i];
    }

    // The error spectrum does not depend on the partition index.
    error_spectra_.clear();
    linear_.adapt(error_spectra_.get(linear_.n_fft(), out.e));
    for (auto& ch : channels_) ch.adapt(error_spectra_.get(ch.n_fft(), out.e));
    if (features_) features_->adapt(out.e);

    if (!dy_da.empty()) {
        double g = 0.0;
        for (std::size_t i = 0; i < L; ++i) g += out.e[i] * dy_da[i];
        expander_->ae_apply_gradient(g);
        ae_mults_ += L + 1;
    }
    return out;
}

TimeWeights PbfdFlaf::equivalent_time_weights() const
{
    TimeWeights tw;
    tw.linear = linear_.taps();
    if (features_) {
        tw.nonlinear.assign(features_->weights().begin(), features_->weights().end());
    } else if (!channels_.empty()) {
        const std::size_t q = channels_.size();
        const std::size_t mi = channels_.front().filter_len();
        tw.nonlinear.assign(q * mi, 0.0);
        for (std::size_t j = 0; j < q; ++j) {
            const auto t = channels_[j].taps();
            for (std::size_t i = 0; i < mi; ++i) tw.nonlinear[i * q + j] = t[i];
        }
    }
    return tw;
}

void PbfdFlaf::set_time_weights(std::span<const double> linear, std::span<const double> nonlinear)
{
    linear_.set_taps(linear);
    if (features_) {
        features_->set_weights(nonlinear);
    } else if (!channels_.empty()) {
        const std::size_t q = channels_.size();
        const std::size_t mi = channels_.front().filter_len();
        if (nonlinear.size() != q * mi) throw InvalidInput("nonlinear weights must hold Q * M_i entries");
        std::vector<double> t(mi);
        for (std::size_t j = 0; j < q; ++j) {
            for (std::size_t i = 0; i < mi; ++i) t[i] = nonlinear[i * q + j];
            channels_[j].set_taps(t);
        }
    } else if (!nonlinear.empty()) {
        throw InvalidInput("filter has no nonlinear branch");
    }
}

std::uint64_t PbfdFlaf::multiplications() const
{
    std::uint64_t total = linear_.multiplications() + error_spectra_.multiplications() + ae_mults_;
    for (const auto& ch : channels_) total += ch.multiplications();
    if (features_) total += features_->multiplications();
    if (expander_) total += expander_->ops().multiplications;
    return total;
}

} // namespace flaf
