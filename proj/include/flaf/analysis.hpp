#pragma once

#include "flaf/spectral.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace flaf {

/// Per-bin correlation of the partition input spectra.
struct AnalysisReport {
    std::size_t partitions = 0;
    std::size_t bin = 0;
    std::size_t blocks = 0;
    /// Normalized correlation, row-major partitions x partitions, unit diagonal.
    std::vector<cplx> corr;
    /// Mean of the first superdiagonal of corr.
    cplx alpha_est{};
    /// lambda_max / lambda_min of corr.
    double cond = 1.0;

    cplx at(std::size_t r, std::size_t c) const { return corr[r * partitions + c]; }
};

struct CorrelationSetup {
    std::size_t part_len = 0;   // M, samples per partition
    std::size_t hop = 0;        // L; frames hold M + L samples
    std::size_t partitions = 1; // M_P
    /// Hops between consecutive partition spectra; 0 selects M / L.
    std::size_t stride = 0;

    std::size_t resolved_stride() const;
};

/// Monte-Carlo estimate of E{X_m X_m^H} for X_m = [X_k(m), X_{k-p}(m), ...],
/// the m-th bin of M_P partition spectra p hops apart, over n_blocks frames
/// of the stream. Normalized so the diagonal is exactly one.
AnalysisReport estimate_bin_correlation(std::span<const double> x, const CorrelationSetup& setup, std::size_t bin,
                                        std::size_t n_blocks);

/// Stream length needed by estimate_bin_correlation.
std::size_t required_stream_length(const CorrelationSetup& setup, std::size_t n_blocks);

/// Condition number of the M_P x M_P tridiagonal Toeplitz matrix with unit
/// diagonal and off-diagonal alpha. Depends on |alpha| only.
double tridiag_condition(std::size_t partitions, double alpha);

} // namespace flaf
