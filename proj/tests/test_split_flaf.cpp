#include "catch_amalgamated.hpp"

#include "flaf/error.hpp"
#include "flaf/split_flaf.hpp"
#include "oracles.hpp"

#include <cmath>
#include <limits>

using namespace flaf;
using Catch::Matchers::WithinAbs;

namespace {

// Plain NLMS written out directly, used as the reference for the linear branch.
struct ReferenceNlms {
    std::vector<double> w, buf;
    double mu, reg;

    ReferenceNlms(std::size_t m, double mu_, double reg_) : w(m, 0.0), buf(m, 0.0), mu(mu_), reg(reg_) {}

    double step(double x, double d)
    {
        for (std::size_t i = buf.size() - 1; i > 0; --i) buf[i] = buf[i - 1];
        buf[0] = x;
        double y = 0.0, energy = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) {
            y += w[i] * buf[i];
            energy += buf[i] * buf[i];
        }
        const double e = d - y;
        const double g = mu * e / (reg + energy);
        for (std::size_t i = 0; i < w.size(); ++i) w[i] += g * buf[i];
        return e;
    }
};

} // namespace

TEST_CASE("zero step sizes keep a fixed filter")
{
    SplitFlaf f(3, 4, 2, 0.0, 0.0, 1e-6);
    const std::vector<double> wl{0.5, -0.25, 0.125}, wn{1.0, 0.0, -1.0, 0.5};
    f.set_linear_weights(wl);
    f.set_nonlinear_weights(wn);

    const auto x = oracle::uniform(50, 1);
    const auto g = oracle::uniform(100, 2);
    std::vector<double> xb(3, 0.0), gb(4, 0.0);
    for (std::size_t n = 0; n < x.size(); ++n) {
        xb = {x[n], xb[0], xb[1]};
        gb = {g[2 * n], g[2 * n + 1], gb[0], gb[1]};
        double want = 0.0;
        for (std::size_t i = 0; i < 3; ++i) want += wl[i] * xb[i];
        for (std::size_t i = 0; i < 4; ++i) want += wn[i] * gb[i];
        const auto out = f.step(x[n], std::span(g).subspan(2 * n, 2), 0.3);
        CHECK_THAT(out.y, WithinAbs(want, 1e-14));
        CHECK_THAT(out.e, WithinAbs(0.3 - want, 1e-14));
    }
    CHECK(std::vector(f.linear_weights().begin(), f.linear_weights().end()) == wl);
    CHECK(std::vector(f.nonlinear_weights().begin(), f.nonlinear_weights().end()) == wn);
}

TEST_CASE("one-tap identity plant converges")
{
    TimeDomainFlaf f(1, std::nullopt, 0.5, 0.0, 1e-6);
    const auto x = oracle::gaussian(2000, 3);
    double e = 1.0;
    for (double s : x) e = f.step(s, s).e;
    CHECK(e * e < 1e-6);
}

TEST_CASE("joint system identification recovers both branches")
{
    const std::size_t m = 6, m_re = 10, stride = 2;
    const auto w_lin = oracle::uniform(m, 4);
    const auto w_nl = oracle::uniform(m_re, 5);
    const std::size_t n_samples = 50 * (m + m_re);

    // Features drawn independently of x so the two branches are identifiable.
    const auto x = oracle::gaussian(n_samples, 6);
    const auto g = oracle::gaussian(n_samples * stride, 7);

    SplitFlaf f(m, m_re, stride, 0.5, 0.5, 1e-9);
    std::vector<double> xb(m, 0.0), gb(m_re, 0.0);
    double last_e = 0.0;
    for (std::size_t n = 0; n < n_samples; ++n) {
        std::copy_backward(xb.begin(), xb.end() - 1, xb.end());
        xb[0] = x[n];
        std::copy_backward(gb.begin(), gb.end() - stride, gb.end());
        for (std::size_t k = 0; k < stride; ++k) gb[k] = g[n * stride + k];
        double d = 0.0;
        for (std::size_t i = 0; i < m; ++i) d += w_lin[i] * xb[i];
        for (std::size_t i = 0; i < m_re; ++i) d += w_nl[i] * gb[i];
        last_e = f.step(x[n], std::span(g).subspan(n * stride, stride), d).e;
    }
    CHECK(std::abs(last_e) < 1e-3);
    for (std::size_t i = 0; i < m; ++i) CHECK_THAT(f.linear_weights()[i], WithinAbs(w_lin[i], 1e-3));
    for (std::size_t i = 0; i < m_re; ++i) CHECK_THAT(f.nonlinear_weights()[i], WithinAbs(w_nl[i], 1e-3));
}

TEST_CASE("zero nonlinear step reduces to linear NLMS bit for bit")
{
    ExpansionConfig ec;
    ec.kind = ExpansionKind::Trigonometric;
    ec.order = 3;
    ec.input_len = 8;
    TimeDomainFlaf f(8, ec, 0.3, 0.0, 1e-3);
    ReferenceNlms ref(8, 0.3, 1e-3);

    const auto x = oracle::uniform(3000, 8, -0.9, 0.9);
    const auto h = oracle::uniform(8, 9);
    const auto d = oracle::convolve(x, h);
    for (std::size_t n = 0; n < x.size(); ++n) {
        const double e = f.step(x[n], d[n]).e;
        REQUIRE(e == ref.step(x[n], d[n]));
    }
    CHECK(std::vector(f.core().linear_weights().begin(), f.core().linear_weights().end()) == ref.w);
    for (double w : f.core().nonlinear_weights()) CHECK(w == 0.0);
}

TEST_CASE("nonlinear buffer follows the interleaved expansion layout")
{
    ExpansionConfig ec;
    ec.kind = ExpansionKind::Legendre;
    ec.order = 2;
    ec.input_len = 3;
    TimeDomainFlaf f(3, ec, 0.0, 0.0, 1e-3);
    Expander ex(ec);
    const std::vector<double> x{0.2, -0.6, 0.9, 0.4};
    for (double s : x) f.step(s, 0.0);
    const auto buf = f.core().nonlinear_buffer();
    REQUIRE(buf.size() == 6);
    // sample-major, newest first: x[3], x[2], x[1]
    for (std::size_t i = 0; i < 3; ++i) {
        const auto phi = ex.expand_sample(x[3 - i]);
        CHECK(buf[2 * i] == phi[0]);
        CHECK(buf[2 * i + 1] == phi[1]);
    }
}

TEST_CASE("mean squared error does not increase on a stationary plant")
{
    ExpansionConfig ec;
    ec.kind = ExpansionKind::Trigonometric;
    ec.order = 2;
    ec.input_len = 8;
    TimeDomainFlaf f(8, ec, 0.2, 0.05, 1e-3);

    const std::size_t n = 20000;
    const auto x = oracle::uniform(n, 10, -0.8, 0.8);
    const auto h = oracle::uniform(8, 11);
    auto clipped = x;
    for (auto& s : clipped) s = std::tanh(2.0 * s);
    auto d = oracle::convolve(clipped, h);
    const auto noise = oracle::gaussian(n, 12, 1e-3);
    for (std::size_t i = 0; i < n; ++i) d[i] += noise[i];

    std::vector<double> window_mse;
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = f.step(x[i], d[i]).e;
        acc += e * e;
        if ((i + 1) % 1000 == 0) {
            window_mse.push_back(acc / 1000.0);
            acc = 0.0;
        }
    }
    int run = 0, worst_run = 0;
    for (std::size_t k = 1; k < window_mse.size(); ++k) {
        // increases larger than 10% count as violations of the trend
        run = window_mse[k] > 1.1 * window_mse[k - 1] ? run + 1 : 0;
        worst_run = std::max(worst_run, run);
    }
    CHECK(worst_run < 3);
    CHECK(window_mse.back() < 0.1 * window_mse.front());
}

TEST_CASE("random vector and adaptive exponential branches run and adapt")
{
    SECTION("random vector")
    {
        ExpansionConfig ec;
        ec.kind = ExpansionKind::RandomVector;
        ec.input_len = 4;
        ec.expanded_len = 12;
        ec.seed = 3;
        TimeDomainFlaf f(4, ec, 0.3, 0.1, 1e-3);
        REQUIRE(f.core().nonlinear_weights().size() == 12);
        const auto x = oracle::uniform(4000, 13, -0.8, 0.8);
        for (double s : x) f.step(s, std::tanh(2.0 * s));
        CHECK_FALSE(f.core().diverged());
        CHECK(f.expander()->ops().multiplications == 4000 * predicted_mul_count(ec));
    }
    SECTION("adaptive exponential moves a")
    {
        ExpansionConfig ec;
        ec.kind = ExpansionKind::AdaptiveExponential;
        ec.order = 2;
        ec.input_len = 4;
        ec.ae_init = 0.5;
        ec.ae_step = 0.01;
        TimeDomainFlaf f(4, ec, 0.3, 0.1, 1e-3);
        const auto x = oracle::uniform(4000, 14, -0.8, 0.8);
        for (double s : x) f.step(s, std::tanh(3.0 * s));
        CHECK(f.expander()->ae_factor() != 0.5);
        CHECK(f.expander()->ae_factor() >= 0.0);
        CHECK(f.expander()->ae_factor() <= kAeFactorMax);
    }
}

TEST_CASE("non-finite samples are skipped and divergence is flagged")
{
    SplitFlaf f(2, 0, 1, 0.5, 0.0, 1e-6);
    const std::vector<double> none;
    f.step(0.5, none, 0.5);
    const std::vector<double> before(f.linear_weights().begin(), f.linear_weights().end());
    f.step(std::numeric_limits<double>::quiet_NaN(), none, 0.1);
    f.step(0.3, none, std::numeric_limits<double>::infinity());
    CHECK(f.skipped() == 2);
    CHECK(std::vector(f.linear_weights().begin(), f.linear_weights().end()) == before);
    CHECK_FALSE(f.diverged());

    // normalization keeps huge but finite signals bounded; only overflowing
    // weights trip the detector
    f.step(1e200, none, 1e300);
    CHECK_FALSE(f.diverged());
    const std::vector<double> huge{1e308, 1e308};
    f.set_linear_weights(huge);
    f.step(1.0, none, 0.0);
    f.step(1.0, none, 0.0);
    CHECK(f.diverged());
}

TEST_CASE("invalid construction")
{
    CHECK_THROWS_AS(SplitFlaf(0, 0, 1, 0.1, 0.1, 1e-3), ConfigError);
    CHECK_THROWS_AS(SplitFlaf(4, 4, 5, 0.1, 0.1, 1e-3), ConfigError);
    CHECK_THROWS_AS(SplitFlaf(4, 4, 1, -0.1, 0.1, 1e-3), ConfigError);
    CHECK_THROWS_AS(SplitFlaf(4, 4, 1, 0.1, 0.1, 0.0), ConfigError);
}
