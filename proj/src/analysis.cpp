#include "flaf/analysis.hpp"

#include "flaf/error.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <string>

namespace flaf {

std::size_t CorrelationSetup::resolved_stride() const
{
    if (stride != 0) return stride;
    if (hop == 0 || part_len % hop != 0)
        throw InvalidInput("partition length must be an integer multiple of the hop (L = M / p)");
    return part_len / hop;
}

std::size_t required_stream_length(const CorrelationSetup& s, std::size_t n_blocks)
{
    const std::size_t frames = n_blocks + s.resolved_stride() * (s.partitions - 1);
    return (frames - 1) * s.hop + s.part_len + s.hop;
}

AnalysisReport estimate_bin_correlation(std::span<const double> x, const CorrelationSetup& s, std::size_t bin,
                                        std::size_t n_blocks)
{
    if (s.part_len == 0 || s.hop == 0 || s.partitions == 0) throw InvalidInput("correlation setup sizes must be >= 1");
    const std::size_t n = s.part_len + s.hop;
    if (bin > n / 2) throw InvalidInput("bin index beyond the half spectrum");
    if (n_blocks < 10 * s.partitions)
        throw InvalidInput("insufficient blocks: need at least 10 per partition, got " + std::to_string(n_blocks));
    if (x.size() < required_stream_length(s, n_blocks))
        throw InvalidInput("stream too short for the requested number of blocks");

    const std::size_t stride = s.resolved_stride();
    const std::size_t frames = n_blocks + stride * (s.partitions - 1);

    std::vector<cplx> twiddle(n);
    for (std::size_t t = 0; t < n; ++t) {
        const double ang = -2.0 * std::numbers::pi * static_cast<double>((bin * t) % n) / static_cast<double>(n);
        twiddle[t] = {std::cos(ang), std::sin(ang)};
    }
    std::vector<cplx> spectra(frames);
    for (std::size_t k = 0; k < frames; ++k) {
        cplx acc{};
        const double* frame = x.data() + k * s.hop;
        for (std::size_t t = 0; t < n; ++t) acc += frame[t] * twiddle[t];
        spectra[k] = acc;
    }

    const auto mp = static_cast<Eigen::Index>(s.partitions);
    Eigen::MatrixXcd R = Eigen::MatrixXcd::Zero(mp, mp);
    Eigen::VectorXcd v(mp);
    for (std::size_t b = 0; b < n_blocks; ++b) {
        const std::size_t k = b + stride * (s.partitions - 1);
        for (Eigen::Index l = 0; l < mp; ++l) v(l) = spectra[k - stride * static_cast<std::size_t>(l)];
        R.noalias() += v * v.adjoint();
    }
    R /= static_cast<double>(n_blocks);

    Eigen::VectorXd scale(mp);
    for (Eigen::Index l = 0; l < mp; ++l) {
        const double d = R(l, l).real();
        if (!(d > 0.0)) throw IllConditioned("zero-power bin: correlation cannot be normalized");
        scale(l) = 1.0 / std::sqrt(d);
    }
    Eigen::MatrixXcd Rn = scale.asDiagonal() * R * scale.asDiagonal();
    for (Eigen::Index l = 0; l < mp; ++l) Rn(l, l) = 1.0;

    AnalysisReport rep;
    rep.partitions = s.partitions;
    rep.bin = bin;
    rep.blocks = n_blocks;
    rep.corr.resize(s.partitions * s.partitions);
    for (Eigen::Index r = 0; r < mp; ++r)
        for (Eigen::Index c = 0; c < mp; ++c) rep.corr[static_cast<std::size_t>(r * mp + c)] = Rn(r, c);
    if (mp > 1) {
        cplx acc{};
        for (Eigen::Index l = 0; l + 1 < mp; ++l) acc += Rn(l, l + 1);
        rep.alpha_est = acc / static_cast<double>(mp - 1);
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(Rn, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (!(lo > 0.0)) throw IllConditioned("estimated correlation matrix is not positive definite");
    rep.cond = hi / lo;
    return rep;
}

double tridiag_condition(std::size_t partitions, double alpha)
{
    if (partitions < 1) throw InvalidInput("partition count must be >= 1");
    if (!std::isfinite(alpha) || std::abs(alpha) > 0.5 + 1e-9)
        throw InvalidInput("off-diagonal magnitude must not exceed 0.5");
    if (partitions == 1) return 1.0;
    // eigenvalues 1 + 2 alpha cos(k pi / (M_P + 1)), k = 1..M_P
    const double c = std::cos(std::numbers::pi / static_cast<double>(partitions + 1));
    const double a = std::abs(alpha);
    const double lo = 1.0 - 2.0 * a * c;
    if (!(lo > 0.0)) throw IllConditioned("tridiagonal correlation matrix is singular");
    return (1.0 + 2.0 * a * c) / lo;
}

} // namespace flaf
