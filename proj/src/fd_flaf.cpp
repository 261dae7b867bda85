#include "flaf/fd_flaf.hpp"

#include "flaf/error.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace flaf {

namespace {

constexpr double kDivergenceLimit = 1e6;

std::size_t bins_of(std::size_t n_fft) { return n_fft / 2 + 1; }

} // namespace

void FreqParams::validate() const
{
    if (!(mu >= 0.0) || !std::isfinite(mu)) throw ConfigError("step size mu must be finite and >= 0");
    if (!(lambda > 0.0 && lambda <= 1.0)) throw ConfigError("forgetting factor lambda must be in (0, 1]");
    if (!(reg > 0.0) || !std::isfinite(reg)) throw ConfigError("regularizer must be finite and > 0");
    if (!(power_init >= 0.0) || !std::isfinite(power_init)) throw ConfigError("power_init must be finite and >= 0");
}

std::uint64_t transform_mults(std::size_t n)
{
    return static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(std::bit_width(n) - 1);
}

namespace detail {

bool all_finite(std::span<const double> v)
{
    return std::all_of(v.begin(), v.end(), [](double s) { return std::isfinite(s); });
}

void check_divergence(const Spectrum& W)
{
    for (const auto& w : W.bins)
        if (!(std::abs(w) <= kDivergenceLimit)) throw DivergenceError("frequency-domain weights diverged (|W| > 1e6)");
}

ExpandedFrame ae_derivative_frame(const ExpandedFrame& frame, std::span<const double> x)
{
    ExpandedFrame out(frame.channel_count(), frame.samples());
    for (std::size_t j = 0; j < frame.channel_count(); ++j) {
        const auto src = frame.channel(j);
        auto dst = out.channel(j);
        for (std::size_t i = 0; i < frame.samples(); ++i) dst[i] = -std::min(std::abs(x[i]), 1.0) * src[i];
    }
    return out;
}

} // namespace detail

// ---------------------------------------------------------------------------

FreqBranch::FreqBranch(std::size_t filter_len, std::size_t hop, const FreqParams& params)
    : fft_(fft_size_for(filter_len, hop)), buf_(fft_size_for(filter_len, hop), hop, filter_len), params_(params),
      W_(fft_.size()), X_(fft_.size()), scratch_spec_(fft_.size()),
      power_(bins_of(fft_.size()), params.power_init), frame_(fft_.size())
{
    params_.validate();
}

void FreqBranch::filter(std::span<const double> block, std::span<double> y)
{
    buf_.push(block);
    fft_.forward(buf_.history(), X_.bins);
    for (std::size_t m = 0; m < X_.size(); ++m) scratch_spec_.bins[m] = X_.bins[m] * W_.bins[m];
    fft_.inverse(scratch_spec_.bins, frame_);
    const std::size_t off = n_fft() - hop();
    for (std::size_t i = 0; i < hop(); ++i) y[i] += frame_[off + i];
    mults_ += 2 * transform_mults(n_fft()) + 4 * X_.size();
}

void FreqBranch::filter_aux(std::span<const double> block, std::span<double> y)
{
    if (!aux_buf_) aux_buf_.emplace(n_fft(), hop(), filter_len());
    aux_buf_->push(block);
    fft_.forward(aux_buf_->history(), scratch_spec_.bins);
    for (std::size_t m = 0; m < scratch_spec_.size(); ++m) scratch_spec_.bins[m] *= W_.bins[m];
    fft_.inverse(scratch_spec_.bins, frame_);
    const std::size_t off = n_fft() - hop();
    for (std::size_t i = 0; i < hop(); ++i) y[i] += frame_[off + i];
    mults_ += 2 * transform_mults(n_fft()) + 4 * X_.size();
}

void FreqBranch::adapt(const Spectrum& E)
{
    if (E.n_fft != n_fft()) throw InvalidInput("error spectrum size does not match the branch");
    const double lam = params_.lambda;
    for (std::size_t m = 0; m < X_.size(); ++m) {
        power_[m] = lam * power_[m] + (1.0 - lam) * std::norm(X_.bins[m]);
        const double step = params_.mu / (params_.reg + power_[m]);
        scratch_spec_.bins[m] = step * std::conj(X_.bins[m]) * E.bins[m];
    }
    mults_ += 10 * X_.size();
    if (params_.constrained) {
        gradient_constrain_inplace(scratch_spec_, filter_len(), fft_, frame_);
        mults_ += 2 * transform_mults(n_fft());
    }
    for (std::size_t m = 0; m < W_.size(); ++m) W_.bins[m] += scratch_spec_.bins[m];
    detail::check_divergence(W_);
}

std::vector<double> FreqBranch::taps() const
{
    std::vector<double> t(n_fft());
    fft_.inverse(W_.bins, t);
    t.resize(filter_len());
    return t;
}

void FreqBranch::set_taps(std::span<const double> taps)
{
    if (taps.size() != filter_len()) throw InvalidInput("set_taps: length must equal the filter length");
    std::vector<double> padded(n_fft(), 0.0);
    std::copy(taps.begin(), taps.end(), padded.begin());
    fft_.forward(padded, W_.bins);
}

// ---------------------------------------------------------------------------

FeatureBranch::FeatureBranch(std::size_t dim, const FreqParams& params)
    : params_(params), w_(dim, 0.0), power_(dim, params.power_init)
{
    params_.validate();
}

void FeatureBranch::filter(const ExpandedFrame& frame, std::span<double> y)
{
    if (frame.feature_dim() != w_.size()) throw InvalidInput("feature frame dimension mismatch");
    for (std::size_t i = 0; i < frame.samples(); ++i) {
        const auto g = frame.features(i);
        double acc = 0.0;
        for (std::size_t f = 0; f < w_.size(); ++f) acc += w_[f] * g[f];
        y[i] += acc;
    }
    mults_ += frame.samples() * w_.size();
    frame_ = frame;
}

void FeatureBranch::adapt(std::span<const double> e)
{
    // Each feature is normalized by its own block energy, so the combined
    // step along directions shared by all features grows like M_re * mu.
    const double lam = params_.lambda;
    const std::size_t dim = w_.size();
    std::vector<double> energy(dim, 0.0);
    std::vector<double> grad(dim, 0.0);
    for (std::size_t i = 0; i < frame_.samples(); ++i) {
        const auto g = frame_.features(i);
        for (std::size_t f = 0; f < dim; ++f) {
            energy[f] += g[f] * g[f];
            grad[f] += e[i] * g[f];
        }
    }
    bool finite = true;
    for (std::size_t f = 0; f < dim; ++f) {
        power_[f] = lam * power_[f] + (1.0 - lam) * energy[f];
        w_[f] += params_.mu / (params_.reg + power_[f]) * grad[f];
        finite = finite && std::abs(w_[f]) <= kDivergenceLimit;
    }
    mults_ += 2 * frame_.samples() * dim + 4 * dim;
    if (!finite) throw DivergenceError("feature branch weights diverged");
}

void FeatureBranch::set_weights(std::span<const double> w)
{
    if (w.size() != w_.size()) throw InvalidInput("feature weight length mismatch");
    std::copy(w.begin(), w.end(), w_.begin());
}

// ---------------------------------------------------------------------------

const Spectrum& ErrorSpectra::get(std::size_t n_fft, std::span<const double> e)
{
    for (const auto& s : cache_)
        if (s.n_fft == n_fft) return s;
    std::vector<double> padded(n_fft, 0.0);
    std::copy(e.begin(), e.end(), padded.end() - static_cast<std::ptrdiff_t>(e.size()));
    Spectrum s(n_fft);
    RealFft(n_fft).forward(padded, s.bins);
    mults_ += transform_mults(n_fft);
    cache_.push_back(std::move(s));
    return cache_.back();
}

// ---------------------------------------------------------------------------

namespace {

const FdFlafConfig& validated(const FdFlafConfig& c)
{
    if (c.filter_len < 1) throw ConfigError("filter length M must be >= 1");
    if (c.hop < 1 || c.hop > c.filter_len) throw ConfigError("block length L must satisfy 1 <= L <= M");
    c.linear.validate();
    if (c.expansion) {
        c.expansion->validate();
        c.nonlinear.validate();
    }
    return c;
}

} // namespace

FdFlaf::FdFlaf(const FdFlafConfig& config)
    : config_(validated(config)), linear_(config.filter_len, config.hop, config.linear)
{
    if (!config_.expansion) return;
    const auto& ex = *config_.expansion;
    expander_.emplace(ex);
    if (ex.kind == ExpansionKind::RandomVector) {
        features_.emplace(ex.expanded_len, config_.nonlinear);
    } else {
        channels_.reserve(ex.channels());
        for (std::size_t j = 0; j < ex.channels(); ++j) channels_.emplace_back(ex.input_len, config_.hop, config_.nonlinear);
    }
}

BlockOutput FdFlaf::process_block(std::span<const double> x, std::span<const double> d)
{
    const std::size_t L = config_.hop;
    if (x.size() != L || d.size() != L) throw InvalidInput("process_block: blocks must hold exactly L samples");
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

TimeWeights FdFlaf::equivalent_time_weights() const
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

void FdFlaf::set_time_weights(std::span<const double> linear, std::span<const double> nonlinear)
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

std::uint64_t FdFlaf::multiplications() const
{
    std::uint64_t total = linear_.multiplications() + error_spectra_.multiplications() + ae_mults_;
    for (const auto& ch : channels_) total += ch.multiplications();
    if (features_) total += features_->multiplications();
    if (expander_) total += expander_->ops().multiplications;
    return total;
}

} // namespace flaf
