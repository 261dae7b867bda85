#include "flaf/scenario.hpp"

#include "flaf/error.hpp"
#include "flaf/wav.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace flaf {

namespace {

void check_zeta(double zeta)
{
    if (!(zeta > 0.0 && zeta <= 0.5)) throw ConfigError("soft-clip threshold zeta must lie in (0, 0.5]");
}

std::vector<double> gaussian(std::size_t n, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, 1.0);
    std::vector<double> out(n);
    for (auto& v : out) v = dist(rng);
    return out;
}

void peak_normalize(std::vector<double>& v)
{
    double peak = 0.0;
    for (const double s : v) peak = std::max(peak, std::abs(s));
    if (peak > 0.0)
        for (auto& s : v) s /= peak;
}

double energy(std::span<const double> v)
{
    double acc = 0.0;
    for (const double s : v) acc += s * s;
    return acc;
}

std::vector<double> make_source(const ScenarioConfig& c)
{
    struct Visitor {
        const ScenarioConfig& c;
        std::vector<double> operator()(const WhiteGaussian&) const
        {
            auto v = gaussian(c.duration_samples, c.seed);
            peak_normalize(v);
            return v;
        }
        std::vector<double> operator()(const ColoredAr1& a) const
        {
            auto v = ar1_colorize(gaussian(c.duration_samples, c.seed), a.alpha);
            peak_normalize(v);
            return v;
        }
        std::vector<double> operator()(const WavFile& f) const
        {
            const WavData wav = read_wav_pcm16(f.path);
            if (static_cast<double>(wav.sample_rate) != c.rir.fs)
                throw ConfigError(f.path.string() + ": sample rate " + std::to_string(wav.sample_rate) +
                                  " Hz differs from the scenario rate");
            std::size_t n = c.duration_samples == 0 ? wav.samples.size() : c.duration_samples;
            if (n > wav.samples.size())
                throw ConfigError(f.path.string() + ": file holds fewer samples than duration_samples");
            std::vector<double> v(n);
            for (std::size_t i = 0; i < n; ++i) v[i] = wav.samples[i] / 32768.0;
            return v;
        }
    };
    return std::visit(Visitor{c}, c.source);
}

} // namespace

void RirSpec::validate() const
{
    if (length < 1) throw ConfigError("RIR length must be >= 1");
    if (!(fs > 0.0) || !std::isfinite(fs)) throw ConfigError("sample rate must be positive");
    if (!(t60_ms > 0.0)) throw ConfigError("T60 must be positive");
}

void ScenarioConfig::validate() const
{
    if (const auto* a = std::get_if<ColoredAr1>(&source); a && !(std::abs(a->alpha) < 1.0))
        throw ConfigError("AR(1) coefficient must satisfy |alpha| < 1");
    if (const auto* sc = std::get_if<SoftClip>(&nonlinearity)) check_zeta(sc->zeta);
    rir.validate();
    if (std::isnan(snr_db) || snr_db == -std::numeric_limits<double>::infinity())
        throw ConfigError("snr_db must be finite or +inf");
    if (duration_samples == 0 && !std::holds_alternative<WavFile>(source))
        throw ConfigError("duration_samples must be >= 1 for synthetic sources");
    for (const auto& g : volume_schedule)
        if (!std::isfinite(g.gain)) throw ConfigError("volume gains must be finite");
}

double soft_clip(double x, double zeta)
{
    check_zeta(zeta);
    if (std::isnan(x)) throw InvalidInput("soft_clip: NaN input");
    const double a = std::min(std::abs(x), 1.0);
    double y;
    if (a <= zeta) {
        y = 2.0 * a / (3.0 * zeta);
    } else if (a <= 2.0 * zeta) {
        const double t = 2.0 - a / zeta;
        y = (3.0 - t * t) / 3.0;
    } else {
        y = 1.0;
    }
    return x < 0.0 ? -y : y;
}

double composite_nl(double x_now, double x_lag4)
{
    if (!std::isfinite(x_now) || !std::isfinite(x_lag4)) throw InvalidInput("composite_nl: non-finite input");
    const double den = x_now * x_now * x_now + 2.0;
    if (den == 0.0) throw InvalidInput("composite_nl: x^3 = -2 makes the map undefined");
    const double s = std::sin(std::numbers::pi * x_now - 2.0 / den);
    return 0.6 * s * s * s - 0.1 * std::cos(4.0 * std::numbers::pi * x_lag4) + 1.125;
}

std::vector<double> ar1_colorize(std::span<const double> white, double alpha)
{
    if (!(std::abs(alpha) < 1.0)) throw ConfigError("AR(1) coefficient must satisfy |alpha| < 1");
    const double g = std::sqrt(1.0 - alpha * alpha);
    std::vector<double> out(white.size());
    double prev = 0.0;
    for (std::size_t n = 0; n < white.size(); ++n) {
        prev = alpha * prev + g * white[n];
        out[n] = prev;
    }
    return out;
}

double rir_envelope(std::size_t n, double t60_ms, double fs)
{
    if (std::isinf(t60_ms)) return 1.0;
    return std::pow(10.0, -3.0 * static_cast<double>(n) / (fs * t60_ms / 1000.0));
}

std::vector<double> generate_rir(const RirSpec& spec)
{
    spec.validate();
    if (spec.length == 1) return {1.0};
    std::vector<double> h = gaussian(spec.length, spec.seed);
    double tail_peak = 0.0;
    for (std::size_t n = 1; n < h.size(); ++n) {
        h[n] *= rir_envelope(n, spec.t60_ms, spec.fs);
        tail_peak = std::max(tail_peak, std::abs(h[n]));
    }
    // direct path dominates the reflections
    h[0] = tail_peak > 0.0 ? 1.5 * tail_peak : 1.0;
    const double norm = std::sqrt(energy(h));
    for (auto& v : h) v /= norm;
    return h;
}

double scheduled_gain(std::span<const GainStep> schedule, std::size_t n)
{
    double g = 1.0;
    std::size_t best = 0;
    bool found = false;
    for (const auto& step : schedule) {
        if (step.start <= n && (!found || step.start >= best)) {
            g = step.gain;
            best = step.start;
            found = true;
        }
    }
    return g;
}

std::vector<double> convolve_causal(std::span<const double> x, std::span<const double> h)
{
    std::vector<double> y(x.size(), 0.0);
    for (std::size_t n = 0; n < x.size(); ++n) {
        double acc = 0.0;
        const std::size_t kmax = std::min(h.size(), n + 1);
        for (std::size_t k = 0; k < kmax; ++k) acc += h[k] * x[n - k];
        y[n] = acc;
    }
    return y;
}

ScenarioStream run_scenario(const ScenarioConfig& config)
{
    config.validate();
    ScenarioStream out;
    out.x = make_source(config);
    if (!config.volume_schedule.empty())
        for (std::size_t n = 0; n < out.x.size(); ++n) out.x[n] *= scheduled_gain(config.volume_schedule, n);

    std::vector<double> distorted(out.x.size());
    struct Visitor {
        const std::vector<double>& x;
        std::vector<double>& y;
        void operator()(const NoDistortion&) const { y = x; }
        void operator()(const SoftClip& c) const
        {
            for (std::size_t n = 0; n < x.size(); ++n) y[n] = soft_clip(x[n], c.zeta);
        }
        void operator()(const Composite&) const
        {
            for (std::size_t n = 0; n < x.size(); ++n) y[n] = composite_nl(x[n], n >= 4 ? x[n - 4] : 0.0);
        }
    };
    std::visit(Visitor{out.x, distorted}, config.nonlinearity);

    out.rir = generate_rir(config.rir);
    out.s = convolve_causal(distorted, out.rir);

    out.v.assign(out.x.size(), 0.0);
    const double es = energy(out.s);
    if (std::isfinite(config.snr_db) && es > 0.0) {
        out.v = gaussian(out.x.size(), config.seed + 1);
        const double ev = energy(out.v);
        const double scale = std::sqrt(es / ev * std::pow(10.0, -config.snr_db / 10.0));
        for (auto& v : out.v) v *= scale;
    }
    out.d.resize(out.x.size());
    for (std::size_t n = 0; n < out.d.size(); ++n) out.d[n] = out.s[n] + out.v[n];
    return out;
}

} // namespace flaf
