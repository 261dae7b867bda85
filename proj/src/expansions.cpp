#include "flaf/expansions.hpp"

#include "flaf/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace flaf {

namespace {

constexpr double kPi = std::numbers::pi;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

} // namespace

std::string_view to_string(ExpansionKind kind)
{
    switch (kind) {
    case ExpansionKind::Chebyshev: return "chebyshev";
    case ExpansionKind::Legendre: return "legendre";
    case ExpansionKind::Trigonometric: return "trigonometric";
    case ExpansionKind::RandomVector: return "random-vector";
    case ExpansionKind::AdaptiveExponential: return "adaptive-exponential";
    }
    return "unknown";
}

std::optional<ExpansionKind> parse_expansion_kind(std::string_view name)
{
    if (name == "chebyshev" || name == "che") return ExpansionKind::Chebyshev;
    if (name == "legendre" || name == "leg") return ExpansionKind::Legendre;
    if (name == "trigonometric" || name == "tri") return ExpansionKind::Trigonometric;
    if (name == "random-vector" || name == "rv") return ExpansionKind::RandomVector;
    if (name == "adaptive-exponential" || name == "ae") return ExpansionKind::AdaptiveExponential;
    return std::nullopt;
}

std::size_t ExpansionConfig::channels() const
{
    switch (kind) {
    case ExpansionKind::Chebyshev:
    case ExpansionKind::Legendre: return order;
    case ExpansionKind::Trigonometric:
    case ExpansionKind::AdaptiveExponential: return 2 * order;
    case ExpansionKind::RandomVector: return 1;
    }
    return 0;
}

std::size_t ExpansionConfig::feature_len() const
{
    if (kind == ExpansionKind::RandomVector) return expanded_len;
    return channels() * input_len;
}

void ExpansionConfig::validate() const
{
    if (order < 1) throw ConfigError("expansion order P must be >= 1");
    if (input_len < 1) throw ConfigError("expansion input length M_i must be >= 1");
    if (kind == ExpansionKind::RandomVector && expanded_len < 1)
        throw ConfigError("random vector expansion needs an explicit expanded length M_re >= 1");
    if (kind == ExpansionKind::AdaptiveExponential) {
        if (!(ae_step >= 0.0) || !std::isfinite(ae_step))
            throw ConfigError("adaptive exponential step size must be finite and >= 0");
        if (!std::isfinite(ae_init)) throw ConfigError("adaptive exponential initial factor must be finite");
    }
}

OpCounter& OpCounter::operator+=(const OpCounter& other)
{
    multiplications += other.multiplications;
    additions += other.additions;
    function_evals += other.function_evals;
    return *this;
}

OpCounter predicted_cost(const ExpansionConfig& c)
{
    const std::uint64_t p = c.order;
    const std::uint64_t mi = c.input_len;
    OpCounter cost;
    switch (c.kind) {
    case ExpansionKind::Chebyshev:
        cost.multiplications = 2 * p * mi;
        cost.additions = p * mi;
        break;
    case ExpansionKind::Legendre:
        cost.multiplications = 2 * p * (2 * mi + 1);
        cost.additions = p * (mi + 2);
        break;
    case ExpansionKind::Trigonometric:
        cost.multiplications = p * (mi + 1);
        cost.function_evals = 2 * p * mi;
        break;
    case ExpansionKind::RandomVector: {
        const std::uint64_t mre = c.expanded_len;
        cost.multiplications = mre * (mi + 1);
        cost.additions = mre * (mi + 1);
        cost.function_evals = mre;
        break;
    }
    case ExpansionKind::AdaptiveExponential: {
        const std::uint64_t mre = 2 * p * mi;
        cost.multiplications = 11 * p * mi + p + 1;
        cost.additions = 2 * mre + 2;
        cost.function_evals = 2 * mre;
        break;
    }
    }
    return cost;
}

std::uint64_t predicted_mul_count(const ExpansionConfig& config)
{
    return predicted_cost(config).multiplications;
}

// ---------------------------------------------------------------------------

ExpandedFrame::ExpandedFrame(std::size_t channels, std::size_t samples, std::size_t feature_dim)
    : channels_(channels), samples_(samples), feature_dim_(feature_dim),
      data_(channels * samples * feature_dim, 0.0)
{
}

std::span<double> ExpandedFrame::channel(std::size_t j)
{
    const std::size_t len = samples_ * feature_dim_;
    return std::span<double>(data_).subspan(j * len, len);
}

std::span<const double> ExpandedFrame::channel(std::size_t j) const
{
    const std::size_t len = samples_ * feature_dim_;
    return std::span<const double>(data_).subspan(j * len, len);
}

std::span<const double> ExpandedFrame::features(std::size_t i) const
{
    return channel(0).subspan(i * feature_dim_, feature_dim_);
}

std::vector<double> ExpandedFrame::interleaved() const
{
    std::vector<double> out;
    out.reserve(data_.size());
    for (std::size_t i = 0; i < samples_; ++i)
        for (std::size_t j = 0; j < channels_; ++j) {
            const auto ch = channel(j);
            out.insert(out.end(), ch.begin() + static_cast<std::ptrdiff_t>(i * feature_dim_),
                       ch.begin() + static_cast<std::ptrdiff_t>((i + 1) * feature_dim_));
        }
    return out;
}

// ---------------------------------------------------------------------------

Expander::Expander(const ExpansionConfig& config) : config_(config)
{
    config_.validate();
    per_sample_cost_ = predicted_cost(config_);
    if (config_.kind == ExpansionKind::RandomVector) {
        std::mt19937_64 rng(config_.seed);
        std::uniform_real_distribution<double> uni(-1.0, 1.0);
        rv_weights_.resize(config_.expanded_len * config_.input_len);
        for (auto& v : rv_weights_) v = uni(rng);
        rv_bias_.resize(config_.expanded_len);
        for (auto& v : rv_bias_) v = uni(rng);
        rv_history_.assign(config_.input_len, 0.0);
    }
    if (config_.kind == ExpansionKind::AdaptiveExponential) set_ae_factor(config_.ae_init);
}

Expander::Expander(const ExpansionConfig& config, std::vector<double> rv_weights, std::vector<double> rv_bias)
    : config_(config), rv_weights_(std::move(rv_weights)), rv_bias_(std::move(rv_bias))
{
    config_.validate();
    if (config_.kind != ExpansionKind::RandomVector)
        throw ConfigError("explicit V/b parameters only apply to the random vector expansion");
    if (rv_weights_.size() != config_.expanded_len * config_.input_len || rv_bias_.size() != config_.expanded_len)
        throw ConfigError("random vector parameters do not match M_re x M_i");
    per_sample_cost_ = predicted_cost(config_);
    rv_history_.assign(config_.input_len, 0.0);
}

void Expander::set_ae_factor(double a)
{
    if (!std::isfinite(a)) {
        ae_warning_ = true;
        return;
    }
    ae_factor_ = std::clamp(a, 0.0, kAeFactorMax);
}

double Expander::sanitize(double x)
{
    if (!std::isfinite(x)) throw InvalidInput("expansion input is not finite");
    if (x > 1.0 || x < -1.0) {
        ++saturations_;
        return std::clamp(x, -1.0, 1.0);
    }
    return x;
}

void Expander::evaluate(double x, std::span<double> out) const
{
    const std::size_t p_order = config_.order;
    switch (config_.kind) {
    case ExpansionKind::Chebyshev: {
        // phi_{-2} = 1, phi_{-1} = x, so phi_j = T_{j+2}(x)
        double prev2 = 1.0;
        double prev1 = x;
        for (std::size_t j = 0; j < p_order; ++j) {
            const double cur = 2.0 * x * prev1 - prev2;
            out[j] = cur;
            prev2 = prev1;
            prev1 = cur;
        }
        break;
    }
    case ExpansionKind::Legendre: {
        // phi_j = P_{j+1}(x) via the three-term recursion from P_0 = 1, P_1 = x
        double prev2 = 1.0;
        double prev1 = x;
        out[0] = x;
        for (std::size_t j = 1; j < p_order; ++j) {
            const double k = static_cast<double>(j + 1);
            const double cur = ((2.0 * k - 1.0) * x * prev1 - (k - 1.0) * prev2) / k;
            out[j] = cur;
            prev2 = prev1;
            prev1 = cur;
        }
        break;
    }
    case ExpansionKind::Trigonometric:
    case ExpansionKind::AdaptiveExponential: {
        const double scale =
            config_.kind == ExpansionKind::AdaptiveExponential ? std::exp(-ae_factor_ * std::abs(x)) : 1.0;
        for (std::size_t p = 1; p <= p_order; ++p) {
            const double arg = static_cast<double>(p) * kPi * x;
            out[2 * p - 2] = scale * std::sin(arg);
            out[2 * p - 1] = scale * std::cos(arg);
        }
        break;
    }
    case ExpansionKind::RandomVector:
        throw Unsupported("random vector expansion has no per-sample functional links");
    }
}

std::vector<double> Expander::expand_sample(double x)
{
    std::vector<double> out(channels());
    expand_sample(x, out);
    return out;
}

void Expander::expand_sample(double x, std::span<double> out)
{
    if (config_.kind == ExpansionKind::RandomVector)
        throw Unsupported("expand_sample is not defined for the random vector expansion; use expand_block");
    if (out.size() != channels()) throw InvalidInput("expand_sample output span must have Q entries");
    const double xs = sanitize(x);
    evaluate(xs, out);
    ops_ += per_sample_cost_;
}

void Expander::rv_features(std::span<double> out)
{
    const std::size_t mi = config_.input_len;
    for (std::size_t r = 0; r < config_.expanded_len; ++r) {
        const double* row = rv_weights_.data() + r * mi;
        double z = rv_bias_[r];
        for (std::size_t c = 0; c < mi; ++c) z += row[c] * rv_history_[c];
        out[r] = sigmoid(z);
    }
}

ExpandedFrame Expander::expand_block(std::span<const double> block)
{
    if (block.empty()) throw InvalidInput("expand_block needs a non-empty block");
    for (double v : block)
        if (!std::isfinite(v)) throw InvalidInput("expansion input block contains non-finite samples");

    if (config_.kind == ExpansionKind::RandomVector) {
        const std::size_t mre = config_.expanded_len;
        ExpandedFrame frame(1, block.size(), mre);
        auto out = frame.channel(0);
        for (std::size_t i = 0; i < block.size(); ++i) {
            std::rotate(rv_history_.rbegin(), rv_history_.rbegin() + 1, rv_history_.rend());
            rv_history_[0] = sanitize(block[i]);
            rv_features(out.subspan(i * mre, mre));
            ops_ += per_sample_cost_;
        }
        return frame;
    }

    const std::size_t q = channels();
    ExpandedFrame frame(q, block.size());
    std::vector<double> phi(q);
    for (std::size_t i = 0; i < block.size(); ++i) {
        evaluate(sanitize(block[i]), phi);
        for (std::size_t j = 0; j < q; ++j) frame.channel(j)[i] = phi[j];
        ops_ += per_sample_cost_;
    }
    return frame;
}

void Expander::expand_history(std::span<const double> x_recent, std::span<double> g) const
{
    const std::size_t q = channels();
    if (g.size() != x_recent.size() * q) throw InvalidInput("expand_history: output must hold Q entries per sample");
    for (std::size_t i = 0; i < x_recent.size(); ++i) evaluate(std::clamp(x_recent[i], -1.0, 1.0), g.subspan(i * q, q));
}

double Expander::ae_output_gradient(std::span<const double> x_recent, std::span<const double> weights) const
{
    if (config_.kind != ExpansionKind::AdaptiveExponential)
        throw Unsupported("exponential factor gradient requires the adaptive exponential expansion");
    const std::size_t q = channels();
    if (weights.size() != x_recent.size() * q)
        throw InvalidInput("AE gradient: weights must hold Q entries per recent sample");
    std::vector<double> phi(q);
    double grad = 0.0;
    for (std::size_t i = 0; i < x_recent.size(); ++i) {
        const double x = std::clamp(x_recent[i], -1.0, 1.0);
        evaluate(x, phi);
        double acc = 0.0;
        for (std::size_t j = 0; j < q; ++j) acc += weights[i * q + j] * phi[j];
        grad += -std::abs(x) * acc;
    }
    return grad;
}

double Expander::ae_apply_gradient(double error_times_gradient)
{
    if (config_.kind != ExpansionKind::AdaptiveExponential)
        throw Unsupported("ae_apply_gradient requires the adaptive exponential expansion");
    const double next = ae_factor_ + config_.ae_step * error_times_gradient;
    if (!std::isfinite(next)) {
        ae_warning_ = true;
        return ae_factor_;
    }
    ae_factor_ = std::clamp(next, 0.0, kAeFactorMax);
    return ae_factor_;
}

double Expander::ae_adapt(std::span<const double> x_recent, double error, std::span<const double> weights)
{
    const double grad = ae_output_gradient(x_recent, weights);
    return ae_apply_gradient(error * grad);
}

} // namespace flaf
