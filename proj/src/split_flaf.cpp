#include "flaf/split_flaf.hpp"

#include "flaf/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace flaf {

namespace {

double dot(std::span<const double> a, std::span<const double> b)
{
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

void push_front(std::vector<double>& buf, std::span<const double> fresh)
{
    if (fresh.size() >= buf.size()) {
        std::copy_n(fresh.begin(), buf.size(), buf.begin());
        return;
    }
    std::copy_backward(buf.begin(), buf.end() - static_cast<std::ptrdiff_t>(fresh.size()), buf.end());
    std::copy(fresh.begin(), fresh.end(), buf.begin());
}

bool nlms_update(std::vector<double>& w, std::span<const double> buf, double mu, double reg, double e)
{
    if (mu == 0.0 || w.empty()) return true;
    const double energy = dot(buf, buf);
    const double g = mu * e / (reg + energy);
    bool finite = true;
    for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] += g * buf[i];
        finite = finite && std::isfinite(w[i]);
    }
    return finite;
}

} // namespace

SplitFlaf::SplitFlaf(std::size_t linear_len, std::size_t nl_len, std::size_t stride, double mu_lin, double mu_nl,
                     double reg)
    : w_lin_(linear_len, 0.0), w_nl_(nl_len, 0.0), buf_lin_(linear_len, 0.0), buf_nl_(nl_len, 0.0),
      stride_(stride), mu_lin_(mu_lin), mu_nl_(mu_nl), reg_(reg)
{
    if (linear_len == 0 && nl_len == 0) throw ConfigError("split FLAF needs at least one branch");
    if (nl_len > 0 && (stride == 0 || stride > nl_len))
        throw ConfigError("nonlinear stride must be in [1, M_re]");
    if (!(mu_lin >= 0.0) || !(mu_nl >= 0.0)) throw ConfigError("step sizes must be >= 0");
    if (!(reg > 0.0)) throw ConfigError("regularizer must be > 0");
}

double SplitFlaf::predict(double x_new, std::span<const double> g_new)
{
    if (!w_nl_.empty() && g_new.size() != stride_)
        throw InvalidInput("expanded input does not match the nonlinear stride");
    const double xs[1] = {x_new};
    push_front(buf_lin_, xs);
    if (!w_nl_.empty()) push_front(buf_nl_, g_new);
    const double y_lin = dot(w_lin_, buf_lin_);
    last_y_nl_ = dot(w_nl_, buf_nl_);
    mults_ += w_lin_.size() + w_nl_.size();
    return y_lin + last_y_nl_;
}

void SplitFlaf::update(double e)
{
    bool ok = nlms_update(w_lin_, buf_lin_, mu_lin_, reg_, e);
    ok = nlms_update(w_nl_, buf_nl_, mu_nl_, reg_, e) && ok;
    if (mu_lin_ != 0.0) mults_ += 2 * w_lin_.size() + 2;
    if (mu_nl_ != 0.0) mults_ += 2 * w_nl_.size() + 2;
    if (!ok) diverged_ = true;
}

SampleOutput SplitFlaf::step(double x_new, std::span<const double> g_new, double d)
{
    if (!std::isfinite(x_new) || !std::isfinite(d)) {
        ++skipped_;
        return {};
    }
    const double y = predict(x_new, g_new);
    const double e = d - y;
    update(e);
    return {y, e};
}

void SplitFlaf::set_linear_weights(std::span<const double> w)
{
    if (w.size() != w_lin_.size()) throw InvalidInput("linear weight length mismatch");
    std::copy(w.begin(), w.end(), w_lin_.begin());
}

void SplitFlaf::set_nonlinear_weights(std::span<const double> w)
{
    if (w.size() != w_nl_.size()) throw InvalidInput("nonlinear weight length mismatch");
    std::copy(w.begin(), w.end(), w_nl_.begin());
}

// ---------------------------------------------------------------------------

namespace {

std::size_t nl_stride(const std::optional<ExpansionConfig>& e)
{
    if (!e) return 0;
    switch (e->kind) {
    case ExpansionKind::RandomVector:
    case ExpansionKind::AdaptiveExponential: return e->feature_len();
    default: return e->channels();
    }
}

} // namespace

TimeDomainFlaf::TimeDomainFlaf(std::size_t linear_len, std::optional<ExpansionConfig> expansion, double mu_lin,
                               double mu_nl, double reg)
    : expander_(expansion ? std::optional<Expander>(std::in_place, *expansion) : std::nullopt),
      core_(linear_len, expansion ? expansion->feature_len() : 0, nl_stride(expansion), mu_lin, mu_nl, reg)
{
    if (expansion) {
        g_.assign(nl_stride(expansion), 0.0);
        if (expansion->kind == ExpansionKind::AdaptiveExponential) x_recent_.assign(expansion->input_len, 0.0);
    }
}

SampleOutput TimeDomainFlaf::step(double x, double d)
{
    if (!std::isfinite(x) || !std::isfinite(d)) return core_.step(x, g_, d);

    if (!expander_) {
        const double y = core_.predict(x, g_);
        const double e = d - y;
        core_.update(e);
        return {y, e};
    }

    const auto kind = expander_->config().kind;
    if (kind == ExpansionKind::RandomVector) {
        const double xs[1] = {x};
        const auto frame = expander_->expand_block(xs);
        const auto f = frame.features(0);
        std::copy(f.begin(), f.end(), g_.begin());
    } else if (kind == ExpansionKind::AdaptiveExponential) {
        // The whole g_n depends on a[n], so it is rebuilt from the raw history.
        const double xs[1] = {std::clamp(x, -1.0, 1.0)};
        push_front(x_recent_, xs);
        std::vector<double> phi(expander_->channels());
        expander_->expand_sample(x, phi); // charges one iteration of the cost model
        expander_->expand_history(x_recent_, g_);
    } else {
        expander_->expand_sample(x, g_);
    }

    const double y = core_.predict(x, g_);
    const double e = d - y;
    if (kind == ExpansionKind::AdaptiveExponential)
        expander_->ae_adapt(x_recent_, e, core_.nonlinear_weights());
    core_.update(e);
    return {y, e};
}

std::uint64_t TimeDomainFlaf::multiplications() const
{
    return core_.multiplications() + (expander_ ? expander_->ops().multiplications : 0);
}

} // namespace flaf
