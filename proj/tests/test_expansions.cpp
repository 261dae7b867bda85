#include "catch_amalgamated.hpp"

#include "flaf/error.hpp"
#include "flaf/expansions.hpp"
#include "oracles.hpp"

#include <cmath>
#include <numbers>

using namespace flaf;
using Catch::Matchers::WithinAbs;

namespace {

ExpansionConfig cfg(ExpansionKind kind, std::size_t order, std::size_t mi = 1)
{
    ExpansionConfig c;
    c.kind = kind;
    c.order = order;
    c.input_len = mi;
    return c;
}

void require_values(const std::vector<double>& got, std::initializer_list<double> want, double tol = 1e-12)
{
    REQUIRE(got.size() == want.size());
    std::size_t i = 0;
    for (double w : want) CHECK_THAT(got[i++], WithinAbs(w, tol));
}

} // namespace

TEST_CASE("chebyshev sample values")
{
    Expander ex(cfg(ExpansionKind::Chebyshev, 3));
    require_values(ex.expand_sample(0.5), {-0.5, -1.0, -0.5});
}

TEST_CASE("legendre sample values")
{
    Expander ex(cfg(ExpansionKind::Legendre, 3));
    require_values(ex.expand_sample(0.5), {0.5, -0.125, -0.4375});
}

TEST_CASE("trigonometric sample at zero")
{
    Expander ex(cfg(ExpansionKind::Trigonometric, 1));
    require_values(ex.expand_sample(0.0), {0.0, 1.0});
}

TEST_CASE("adaptive exponential with zero factor")
{
    auto c = cfg(ExpansionKind::AdaptiveExponential, 1);
    c.ae_init = 0.0;
    Expander ex(c);
    const double r = std::sqrt(0.5);
    require_values(ex.expand_sample(0.25), {r, r}, 1e-12);
}

TEST_CASE("polynomial expansions match closed forms on random inputs")
{
    const auto xs = oracle::uniform(1000, 42);
    for (std::size_t p = 1; p <= 10; ++p) {
        Expander che(cfg(ExpansionKind::Chebyshev, p));
        Expander leg(cfg(ExpansionKind::Legendre, p));
        double worst = 0.0;
        for (double x : xs) {
            const auto c = che.expand_sample(x);
            const auto l = leg.expand_sample(x);
            for (std::size_t j = 0; j < p; ++j) {
                worst = std::max(worst, std::abs(c[j] - oracle::chebyshev_t(j + 2, x)));
                worst = std::max(worst, std::abs(l[j] - oracle::legendre_p(j + 1, x)));
            }
        }
        INFO("P = " << p);
        CHECK(worst < 1e-9);
    }
}

TEST_CASE("adaptive exponential at a = 0 equals trigonometric bit for bit")
{
    auto ae = cfg(ExpansionKind::AdaptiveExponential, 7);
    Expander a(ae);
    Expander t(cfg(ExpansionKind::Trigonometric, 7));
    for (double x : oracle::uniform(500, 3)) CHECK(a.expand_sample(x) == t.expand_sample(x));
}

TEST_CASE("expand_block channel layout")
{
    SECTION("trigonometric rows")
    {
        Expander ex(cfg(ExpansionKind::Trigonometric, 1));
        const std::vector<double> block{0.0, 0.5};
        const auto f = ex.expand_block(block);
        REQUIRE(f.channel_count() == 2);
        CHECK_THAT(f.channel(0)[0], WithinAbs(0.0, 1e-15));
        CHECK_THAT(f.channel(0)[1], WithinAbs(1.0, 1e-15));
        CHECK_THAT(f.channel(1)[0], WithinAbs(1.0, 1e-15));
        CHECK_THAT(f.channel(1)[1], WithinAbs(0.0, 1e-15));
    }
    SECTION("chebyshev at one")
    {
        Expander ex(cfg(ExpansionKind::Chebyshev, 2));
        const std::vector<double> block{1.0};
        const auto f = ex.expand_block(block);
        CHECK(f.channel(0)[0] == 1.0);
        CHECK(f.channel(1)[0] == 1.0);
    }
    SECTION("interleaving is sample-major")
    {
        Expander ex(cfg(ExpansionKind::Legendre, 3));
        const std::vector<double> block{0.1, -0.4, 0.7};
        const auto f = ex.expand_block(block);
        const auto flat = f.interleaved();
        REQUIRE(flat.size() == 9);
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 3; ++j) CHECK(flat[i * 3 + j] == f.channel(j)[i]);
    }
}

TEST_CASE("random vector expansion")
{
    auto c = cfg(ExpansionKind::RandomVector, 1, 4);
    c.expanded_len = 6;
    c.seed = 99;

    SECTION("zero parameters give one half everywhere")
    {
        Expander ex(c, std::vector<double>(24, 0.0), std::vector<double>(6, 0.0));
        const auto f = ex.expand_block(oracle::uniform(5, 1));
        for (double v : f.channel(0)) CHECK(v == 0.5);
    }
    SECTION("parameters drawn once in [-1, 1], deterministic in the seed")
    {
        Expander a(c), b(c);
        CHECK(a.rv_weights() == b.rv_weights());
        CHECK(a.rv_bias() == b.rv_bias());
        for (double v : a.rv_weights()) CHECK((v >= -1.0 && v <= 1.0));
        const auto x = oracle::uniform(20, 5);
        const auto fa = a.expand_block(x);
        const auto fb = b.expand_block(x);
        CHECK(fa.interleaved() == fb.interleaved());
        for (double v : fa.channel(0)) CHECK((v > 0.0 && v < 1.0));
        auto other = c;
        other.seed = 100;
        CHECK(Expander(other).rv_weights() != a.rv_weights());
    }
    SECTION("features follow sigmoid(V x + b) over the sliding window")
    {
        Expander ex(c);
        const auto x = oracle::uniform(7, 8);
        const auto f = ex.expand_block(x);
        const std::size_t n = 6; // last sample; window x[6], x[5], x[4], x[3]
        for (std::size_t r = 0; r < 6; ++r) {
            double z = ex.rv_bias()[r];
            for (std::size_t k = 0; k < 4; ++k) z += ex.rv_weights()[r * 4 + k] * x[n - k];
            CHECK_THAT(f.features(n)[r], WithinAbs(1.0 / (1.0 + std::exp(-z)), 1e-14));
        }
    }
    SECTION("per-sample expansion is unsupported")
    {
        Expander ex(c);
        CHECK_THROWS_AS(ex.expand_sample(0.1), Unsupported);
    }
}

TEST_CASE("outputs stay bounded")
{
    const auto xs = oracle::uniform(300, 17);
    for (auto kind : {ExpansionKind::Chebyshev, ExpansionKind::Legendre, ExpansionKind::Trigonometric,
                      ExpansionKind::AdaptiveExponential}) {
        auto c = cfg(kind, 10);
        c.ae_init = 1.5;
        Expander ex(c);
        for (double x : xs)
            for (double v : ex.expand_sample(x)) CHECK(std::abs(v) <= 1.0 + 1e-12);
    }
}

TEST_CASE("inputs outside [-1, 1] saturate and are counted")
{
    Expander ex(cfg(ExpansionKind::Chebyshev, 2));
    CHECK(ex.expand_sample(1.7) == ex.expand_sample(1.0));
    CHECK(ex.saturations() == 1);
    CHECK_THROWS_AS(ex.expand_sample(std::nan("")), InvalidInput);
    CHECK_THROWS_AS(ex.expand_block(std::vector<double>{}), InvalidInput);
}

TEST_CASE("configuration invariants")
{
    CHECK(cfg(ExpansionKind::Chebyshev, 4, 10).feature_len() == 40);
    CHECK(cfg(ExpansionKind::Trigonometric, 4, 10).channels() == 8);
    CHECK(cfg(ExpansionKind::AdaptiveExponential, 4, 10).feature_len() == 80);
    auto rv = cfg(ExpansionKind::RandomVector, 4, 10);
    CHECK_THROWS_AS(rv.validate(), ConfigError);
    rv.expanded_len = 33;
    CHECK(rv.channels() == 1);
    CHECK(rv.feature_len() == 33);
    CHECK_THROWS_AS(cfg(ExpansionKind::Legendre, 0).validate(), ConfigError);
    auto ae = cfg(ExpansionKind::AdaptiveExponential, 1);
    ae.ae_step = -1.0;
    CHECK_THROWS_AS(ae.validate(), ConfigError);
    CHECK(parse_expansion_kind("rv") == ExpansionKind::RandomVector);
    CHECK(parse_expansion_kind(to_string(ExpansionKind::Legendre)) == ExpansionKind::Legendre);
    CHECK_FALSE(parse_expansion_kind("spline"));
}

TEST_CASE("multiplication counts follow the cost table")
{
    const std::uint64_t p = 10, mi = 128;
    CHECK(predicted_mul_count(cfg(ExpansionKind::Chebyshev, p, mi)) == 2 * p * mi);
    CHECK(predicted_mul_count(cfg(ExpansionKind::Chebyshev, p, mi)) == 2560);
    CHECK(predicted_mul_count(cfg(ExpansionKind::Legendre, p, mi)) == 2 * p * (2 * mi + 1));
    CHECK(predicted_mul_count(cfg(ExpansionKind::Trigonometric, p, mi)) == 1290);
    CHECK(predicted_mul_count(cfg(ExpansionKind::AdaptiveExponential, p, mi)) == 11 * p * mi + p + 1);
    auto rv = cfg(ExpansionKind::RandomVector, p, mi);
    rv.expanded_len = 256;
    CHECK(predicted_mul_count(rv) == 33024);

    SECTION("counter after N samples is N times the table entry")
    {
        for (auto kind : {ExpansionKind::Chebyshev, ExpansionKind::Legendre, ExpansionKind::Trigonometric,
                          ExpansionKind::RandomVector, ExpansionKind::AdaptiveExponential}) {
            auto c = cfg(kind, 3, 8);
            c.expanded_len = 12;
            Expander ex(c);
            const auto x = oracle::uniform(37, 2);
            ex.expand_block(std::span(x).first(20));
            ex.expand_block(std::span(x).subspan(20));
            CHECK(ex.ops().multiplications == 37 * predicted_mul_count(c));
        }
    }
}

TEST_CASE("exponential factor gradient")
{
    auto c = cfg(ExpansionKind::AdaptiveExponential, 3, 5);
    c.ae_init = 0.7;
    c.ae_step = 0.01;
    const auto x_recent = oracle::uniform(5, 11);
    const auto w = oracle::uniform(5 * 6, 12);

    const auto output = [&](double a) {
        auto cc = c;
        cc.ae_init = a;
        Expander e(cc);
        std::vector<double> g(30);
        e.expand_history(x_recent, g);
        double y = 0.0;
        for (std::size_t k = 0; k < g.size(); ++k) y += w[k] * g[k];
        return y;
    };

    Expander ex(c);
    const double h = 1e-5;
    const double fd = (output(0.7 + h) - output(0.7 - h)) / (2.0 * h);
    CHECK_THAT(ex.ae_output_gradient(x_recent, w), WithinAbs(fd, 1e-6));

    SECTION("single tap by hand")
    {
        auto one = cfg(ExpansionKind::AdaptiveExponential, 1, 1);
        one.ae_init = 0.3;
        one.ae_step = 0.01;
        Expander e1(one);
        const double x = 0.4, w0 = 0.8, w1 = -0.5;
        const std::vector<double> xr{x}, ww{w0, w1};
        const double by_hand = -x * std::exp(-0.3 * x) * (w0 * std::sin(std::numbers::pi * x) + w1 * std::cos(std::numbers::pi * x));
        CHECK_THAT(e1.ae_output_gradient(xr, ww), WithinAbs(by_hand, 1e-14));
        const double a1 = e1.ae_adapt(xr, 0.2, ww);
        CHECK_THAT(a1, WithinAbs(0.3 + 0.01 * 0.2 * by_hand, 1e-15));
    }
    SECTION("zero step or zero error leaves a unchanged")
    {
        auto z = c;
        z.ae_step = 0.0;
        Expander e0(z);
        CHECK(e0.ae_adapt(x_recent, 0.5, w) == 0.7);
        CHECK(ex.ae_adapt(x_recent, 0.0, w) == 0.7);
    }
    SECTION("factor is clamped to [0, 20]")
    {
        ex.ae_apply_gradient(-1e6);
        CHECK(ex.ae_factor() == 0.0);
        ex.ae_apply_gradient(1e6);
        CHECK(ex.ae_factor() == kAeFactorMax);
    }
    SECTION("non-finite gradient keeps the state and raises the warning")
    {
        ex.ae_apply_gradient(std::numeric_limits<double>::infinity());
        CHECK(ex.ae_factor() == 0.7);
        CHECK(ex.ae_warning());
    }
}
